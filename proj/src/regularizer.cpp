#include "nlpr/regularizer.hpp"

#include <stdexcept>

namespace nlpr {

NlprWeights NlprWeights::unit(const Grid& g, std::vector<Shift> shifts) {
    NlprWeights w;
    w.grid = g;
    w.values = Eigen::MatrixXd::Ones(g.pixels(), static_cast<Eigen::Index>(shifts.size()));
    w.shifts = std::move(shifts);
    w.h = 1.0;
    return w;
}

NlprWeights compute_weights(const MultibandImage& guide, std::span<const Shift> shifts, int K,
                            double h, bool drop_tiny) {
    if (h <= 0) throw std::invalid_argument("weights: h must be > 0");
    if (K < 0) throw std::invalid_argument("weights: K must be >= 0");
    const Grid& g = guide.grid;

    NlprWeights w;
    w.grid = g;
    w.shifts.assign(shifts.begin(), shifts.end());
    w.h = h;
    w.values.resize(g.pixels(), static_cast<Eigen::Index>(shifts.size()));

    Eigen::VectorXd sq(g.pixels()), box(g.pixels());
    for (int t = 0; t < static_cast<int>(shifts.size()); ++t) {
        MultibandImage shifted = shift(guide, shifts[t]);
        sq = (guide.data - shifted.data).rowwise().squaredNorm();
        // ||P_{i,tau}||^2 = sum_{k in [-K,K]^2} sq(i - k)
        box.setZero();
        for (int k1 = -K; k1 <= K; ++k1)
            for (int k2 = -K; k2 <= K; ++k2)
                for (int i1 = 0; i1 < g.p; ++i1) {
                    const int s1 = Grid::wrap(i1 - k1, g.p) * g.q;
                    const int d1 = i1 * g.q;
                    for (int i2 = 0; i2 < g.q; ++i2)
                        box[d1 + i2] += sq[s1 + Grid::wrap(i2 - k2, g.q)];
                }
        w.values.col(t) = (-box.array() / (h * h)).exp();
    }
    if (drop_tiny) w.values = (w.values.array() < 1e-12).select(0.0, w.values);
    return w;
}

NlprWeights compute_weights(const MultibandImage& guide, int S, int K, double h,
                            bool drop_tiny) {
    auto shifts = window_shifts(S);
    return compute_weights(guide, shifts, K, h, drop_tiny);
}

MultibandImage q_prox(const MultibandImage& qtilde, const NlprWeights& w, int tau_index,
                      double lambda2, double rho) {
    if (lambda2 < 0 || rho <= 0) throw std::invalid_argument("q_prox: need lambda2 >= 0, rho > 0");
    MultibandImage out(qtilde.grid, qtilde.bands());
    const double scale = lambda2 / rho;
    for (int c = 0; c < qtilde.bands(); ++c) {
        const double* in = qtilde.data.col(c).data();
        const double* om = w.values.col(tau_index).data();
        double* dst = out.data.col(c).data();
        for (int i = 0; i < qtilde.pixels(); ++i) dst[i] = soft_threshold(in[i], scale * om[i]);
    }
    return out;
}

void q_prox_group_l2(std::span<MultibandImage> blocks, const NlprWeights& w, int tau_index,
                     double lambda2, double rho) {
    if (blocks.empty()) return;
    if (lambda2 < 0 || rho <= 0) throw std::invalid_argument("q_prox: need lambda2 >= 0, rho > 0");
    const int n = blocks[0].pixels();
    Eigen::VectorXd norm2 = Eigen::VectorXd::Zero(n);
    for (const auto& b : blocks) norm2 += b.data.rowwise().squaredNorm();
    const double scale = lambda2 / rho;
    Eigen::VectorXd factor(n);
    const double* om = w.values.col(tau_index).data();
    for (int i = 0; i < n; ++i) {
        const double nv = std::sqrt(norm2[i]);
        factor[i] = nv > 0 ? std::max(1.0 - scale * om[i] / nv, 0.0) : 0.0;
    }
    for (auto& b : blocks) b.data.array().colwise() *= factor.array();
}

MultibandImage q_prox_squared_l2(const MultibandImage& qtilde, const NlprWeights& w,
                                 int tau_index, double lambda2, double rho) {
    if (lambda2 < 0 || rho <= 0) throw std::invalid_argument("q_prox: need lambda2 >= 0, rho > 0");
    MultibandImage out(qtilde.grid, qtilde.bands());
    Eigen::ArrayXd factor = rho / (rho + 2.0 * lambda2 * w.values.col(tau_index).array());
    out.data = qtilde.data.array().colwise() * factor;
    return out;
}

double regularizer_value(const MultibandImage& X, const NlprWeights& w,
                         std::span<const DifferenceFilter> filters, PenaltyKind kind) {
    if (X.grid != w.grid) throw std::invalid_argument("regularizer: grid mismatch");
    double total = 0;
    if (kind == PenaltyKind::WeightedL1) {
        for (const auto& f : filters) {
            MultibandImage d = apply_difference(f, X);
            total += (d.data.cwiseAbs().rowwise().sum().array() *
                      w.values.col(f.tau_index).array())
                         .sum();
        }
        return total;
    }
    // l2 variants group the (k, band) entries of one tau before the norm.
    std::size_t i = 0;
    Eigen::VectorXd norm2(X.pixels());
    while (i < filters.size()) {
        std::size_t j = i;
        norm2.setZero();
        while (j < filters.size() && filters[j].tau == filters[i].tau) {
            norm2 += apply_difference(filters[j], X).data.rowwise().squaredNorm();
            ++j;
        }
        const auto om = w.values.col(filters[i].tau_index).array();
        if (kind == PenaltyKind::WeightedL2)
            total += (norm2.array().sqrt() * om).sum();
        else
            total += (norm2.array() * om).sum();
        i = j;
    }
    return total;
}

double penalty_value(std::span<const MultibandImage> blocks, const NlprWeights& w,
                     std::span<const DifferenceFilter> filters, PenaltyKind kind) {
    if (blocks.size() != filters.size())
        throw std::invalid_argument("penalty: blocks must align with filters");
    double total = 0;
    if (kind == PenaltyKind::WeightedL1) {
        for (std::size_t f = 0; f < filters.size(); ++f)
            total += (blocks[f].data.cwiseAbs().rowwise().sum().array() *
                      w.values.col(filters[f].tau_index).array())
                         .sum();
        return total;
    }
    std::size_t i = 0;
    while (i < filters.size()) {
        std::size_t j = i;
        Eigen::VectorXd norm2 = Eigen::VectorXd::Zero(blocks[i].pixels());
        while (j < filters.size() && filters[j].tau == filters[i].tau) {
            norm2 += blocks[j].data.rowwise().squaredNorm();
            ++j;
        }
        const auto om = w.values.col(filters[i].tau_index).array();
        if (kind == PenaltyKind::WeightedL2)
            total += (norm2.array().sqrt() * om).sum();
        else
            total += (norm2.array() * om).sum();
        i = j;
    }
    return total;
}

}  // namespace nlpr
