#pragma once

#include "nlpr/grid.hpp"
#include "nlpr/linops.hpp"
#include "nlpr/solver.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>

namespace nlpr {

/// Degradation protocol: blur + decimation to Y_l, spectral projection to
/// Y_h, white Gaussian noise at the given SNRs (dB; +inf disables noise).
/// Noise power is normalized against the clean block's mean square.
struct DegradationSpec {
    BlurFilter blur = BlurFilter::starck_murtagh();
    int factor = 4;
    SpectralResponse R;
    double snr_l_db = 25.0;
    double snr_h_db = 25.0;
    std::uint64_t seed = 0;
};

enum class PhantomKind { Texture, Mondrian, Ramp };

/// Deterministic-under-seed ground truth in [0,1] with inter-band
/// correlation of effective rank <= min(L, 6).
MultibandImage make_phantom(PhantomKind kind, int p, int q, int bands, std::uint64_t seed);

/// Boxcar-profile spectral response: L_h columns averaging overlapping
/// triangular band groups; entries nonnegative, columns sum to 1.
SpectralResponse make_spectral_response(int L_l, int L_h);

/// (Y_l, Y_h) = (S B Z + N_l, Z R + N_h).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> degrade(const MultibandImage& Z,
                                                    const DegradationSpec& spec);

/// Mean over bands, used as an inpainting guide.
MultibandImage grayscale(const MultibandImage& img);

/// Inpainting setup: irregular mask keeping round(fraction * n_h) pixels,
/// B = I, R = I, E = I; the solver handles any 0/1 diagonal mask unchanged.
struct InpaintingInstance {
    Eigen::MatrixXd Yl;  // kept rows of Z
    FusionOperators ops;
};

InpaintingInstance make_inpainting_instance(const MultibandImage& Z, double kept_fraction,
                                            std::uint64_t seed);

}  // namespace nlpr
