#pragma once

#include "nlpr/grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace nlpr {

/// Circular 2-D blur stored as sparse taps: out(i) = sum_j v_j * img(i - off_j).
/// Tap offsets wrap modularly when placed on a grid. The adjoint is the
/// modularly flipped kernel.
struct BlurFilter {
    struct Tap {
        Shift offset;
        double value;
    };
    std::vector<Tap> taps;
    bool normalized = false;  // taps sum to 1 (unit DC gain)

    double tap_sum() const;

    /// Single unit tap at the origin.
    static BlurFilter identity();

    /// Separable B3-spline kernel, outer product of [1,4,6,4,1]/16.
    static BlurFilter starck_murtagh();

    /// Truncated, renormalized Gaussian of given sigma and radius.
    static BlurFilter gaussian(double sigma, int radius);
};

MultibandImage apply_blur(const BlurFilter& B, const MultibandImage& img);
MultibandImage apply_blur_adjoint(const BlurFilter& B, const MultibandImage& img);

/// Spatial sampling operator S as a 0/1 mask over a grid. S^T S is the
/// diagonal of the mask; S S^T is the identity on the sampled set.
struct SamplingMask {
    Grid grid;
    std::vector<std::uint8_t> mask;  // pixels(), 1 = sampled
    std::vector<int> kept_rows;      // sorted linear indices of sampled pixels
    int factor = 0;                  // regular decimation factor, 0 = irregular

    static SamplingMask all(const Grid& g);

    /// Regular decimation by d, phase anchored at pixel (0,0); d must divide
    /// both p and q.
    static SamplingMask decimation(const Grid& g, int d);

    static SamplingMask from_mask(const Grid& g, std::vector<std::uint8_t> m);

    int kept() const { return static_cast<int>(kept_rows.size()); }
};

/// Rows of img at the sampled pixels, in index order (n_l x L).
Eigen::MatrixXd downsample(const SamplingMask& S, const MultibandImage& img);

/// S^T: scatter observation rows back to the grid, zeros elsewhere.
MultibandImage upsample_adjoint(const SamplingMask& S, const Eigen::MatrixXd& obs);

/// Spectral response R (L_l x L_h), applied as Y_h = Z * R.
struct SpectralResponse {
    Eigen::MatrixXd R;

    SpectralResponse() = default;
    explicit SpectralResponse(Eigen::MatrixXd r);

    static SpectralResponse identity(int bands);
};

/// Subspace basis E (L_s x L_l) with Z = X * E. Built from the top right
/// singular vectors of Y_l, so E E^T = I.
struct SubspaceBasis {
    Eigen::MatrixXd E;
    bool orthonormal_rows = false;
    bool rank_deficient = false;  // input rank < L_s at build time

    static SubspaceBasis identity(int bands);
};

SubspaceBasis build_subspace(const Eigen::MatrixXd& Yl, int Ls);

/// Two-tap patch-difference filter d_{tau,k}: +1 at k, -1 at tau+k (mod grid).
/// All-zero when tau wraps to (0,0). tau_index points into the window shift
/// list shared with the weights.
struct DifferenceFilter {
    Shift tau;
    Shift k;
    int tau_index = 0;
};

/// Search-window shifts W. Full window is [-S,S]^2 (zero shift excluded by
/// default); axis_only keeps the four axis neighbours of radius 1.
std::vector<Shift> window_shifts(int S, bool axis_only = false, bool include_zero = false);

/// One filter per (tau, k): tau over the window, k over [-K,K]^2, both
/// lexicographic; filters of one tau are contiguous.
std::vector<DifferenceFilter> build_difference_filters(std::span<const Shift> window, int K);
std::vector<DifferenceFilter> build_difference_filters(int S, int K, bool include_zero = false);

/// D_{tau,k} X(i,c) = X_c(i-k) - X_c(i-tau-k), by two modular shifts.
MultibandImage apply_difference(const DifferenceFilter& f, const MultibandImage& img);

/// D^T: out(i,c) = img(i+k,c) - img(i+tau+k,c).
MultibandImage apply_difference_adjoint(const DifferenceFilter& f, const MultibandImage& img);

/// In-place accumulate out += D^T img (used when assembling the X-update
/// right-hand side without temporaries).
void add_difference_adjoint(const DifferenceFilter& f, const MultibandImage& img,
                            MultibandImage& out);

}  // namespace nlpr
