#pragma once

#include "nlpr/grid.hpp"
#include "nlpr/linops.hpp"

#include <Eigen/Dense>

#include <complex>
#include <span>

namespace nlpr {

/// 2-D DFT of one band laid out like a pixel vector (frequency (w1,w2) at
/// w1*q + w2). Forward transform is unnormalized; the inverse divides by n_h,
/// so ifft2(fft2(x)) == x.
Eigen::VectorXcd fft2(const Grid& g, const Eigen::VectorXd& band);
Eigen::VectorXcd fft2(const Grid& g, const Eigen::VectorXcd& band);
Eigen::VectorXcd ifft2(const Grid& g, const Eigen::VectorXcd& spectrum);

/// Inverse DFT of a spectrum known to be conjugate-symmetric; asserts the
/// imaginary residue stays below tol * max(1, |result|) before dropping it.
Eigen::VectorXd ifft2_real(const Grid& g, const Eigen::VectorXcd& spectrum,
                           double imag_tol = 1e-10);

/// Spectrum of a tap filter placed on the grid.
Eigen::VectorXcd filter_spectrum(const Grid& g, const BlurFilter& B);
Eigen::VectorXcd filter_spectrum(const Grid& g, const DifferenceFilter& f);

/// Cached spectra for the X-update system
///   (I + B^T B + sum_{tau,k} D^T D) X = C.
/// Because |d_hat_{tau,k}| is the same for every k of one tau, the
/// denominator is assembled from one representative filter per tau scaled by
/// the per-tau filter count:
///   denom(w) = 1 + |b_hat(w)|^2 + |P| * sum_tau |d_hat_{tau,k0}(w)|^2.
/// denom >= 1 everywhere, and equals 1 + |b_hat(0)|^2 at DC.
struct FrequencyPlan {
    Grid grid;
    Eigen::VectorXcd b_hat;
    Eigen::VectorXd d0_power;   // sum_tau |d_hat_{tau,k0}|^2
    Eigen::VectorXd denom;
    Eigen::VectorXd inv_denom;  // stored reciprocal, one multiply per use
};

FrequencyPlan plan(const Grid& g, const BlurFilter& B, std::span<const DifferenceFilter> filters);

/// Per-band X_c = IDFT(DFT(C_c) / denom); output is real.
MultibandImage solve_x_system(const FrequencyPlan& plan, const MultibandImage& C);

}  // namespace nlpr
