#pragma once

#include "nlpr/grid.hpp"
#include "nlpr/linops.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

namespace nlpr {

/// Guide weights omega_{i,tau} = exp(-||P_{i,tau}(guide)||_2^2 / h^2), one
/// column per window shift. Weights are computed once from the guide and
/// stay fixed; that is what keeps the regularized objective convex.
struct NlprWeights {
    Grid grid;
    std::vector<Shift> shifts;
    Eigen::MatrixXd values;  // pixels() x |W|, entries in (0, 1]
    double h = 0;

    /// Unit weights (the unguided / unweighted ablation setting).
    static NlprWeights unit(const Grid& g, std::vector<Shift> shifts);
};

/// Weights from a guide image; K is the guide patch radius. The squared
/// patch-difference norm is a box sum over [-K,K]^2 of per-pixel squared
/// band differences, which is how it is computed here.
NlprWeights compute_weights(const MultibandImage& guide, std::span<const Shift> shifts, int K,
                            double h, bool drop_tiny = false);
NlprWeights compute_weights(const MultibandImage& guide, int S, int K, double h,
                            bool drop_tiny = false);

enum class PenaltyKind {
    WeightedL1,  // sum_{i,tau} w ||P_{i,tau}(X)||_1  (the NLPR form)
    WeightedL2,  // sum_{i,tau} w ||P_{i,tau}(X)||_2
    SquaredL2,   // sum_{i,tau} w ||P_{i,tau}(X)||_2^2
};

/// sign(x) * max(|x| - mu, 0).
inline double soft_threshold(double x, double mu) {
    double m = std::abs(x) - mu;
    return m > 0 ? (x < 0 ? -m : m) : 0.0;
}

/// Entrywise prox of the weighted l1 block for one filter: threshold
/// lambda2 * w_{i,tau} / rho, varying per pixel, constant across bands.
MultibandImage q_prox(const MultibandImage& qtilde, const NlprWeights& w, int tau_index,
                      double lambda2, double rho);

/// Group shrinkage across the (k, band) entries of one tau: blocks are the
/// |P| filter images of that tau; each pixel's stacked vector is scaled by
/// max(1 - mu/||v||, 0) with mu = lambda2 * w / rho.
void q_prox_group_l2(std::span<MultibandImage> blocks, const NlprWeights& w, int tau_index,
                     double lambda2, double rho);

/// Prox of the squared penalty: pixelwise scaling rho / (rho + 2 lambda2 w).
MultibandImage q_prox_squared_l2(const MultibandImage& qtilde, const NlprWeights& w,
                                 int tau_index, double lambda2, double rho);

/// phi(X) evaluated through the filter form; filters must share the weight
/// window (tau_index into w.shifts).
double regularizer_value(const MultibandImage& X, const NlprWeights& w,
                         std::span<const DifferenceFilter> filters,
                         PenaltyKind kind = PenaltyKind::WeightedL1);

/// g(Q): the same weighted penalty evaluated on given blocks (one image per
/// filter, aligned with the filter list).
double penalty_value(std::span<const MultibandImage> blocks, const NlprWeights& w,
                     std::span<const DifferenceFilter> filters,
                     PenaltyKind kind = PenaltyKind::WeightedL1);

}  // namespace nlpr
