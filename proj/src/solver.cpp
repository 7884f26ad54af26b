#include "nlpr/solver.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nlpr {

void SolverConfig::validate() const {
    if (!(rho > 0)) throw std::invalid_argument("config: rho must be > 0");
    if (lambda1 < 0 || lambda2 < 0) throw std::invalid_argument("config: lambdas must be >= 0");
    if (!(h > 0)) throw std::invalid_argument("config: h must be > 0");
    if (S < 1 || K < 0) throw std::invalid_argument("config: need S >= 1, K >= 0");
    if (Ls < 1) throw std::invalid_argument("config: L_s must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("config: max_iters must be >= 1");
    if (!(tol_primal > 0)) throw std::invalid_argument("config: tol_primal must be > 0");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
}

NlprWeights make_weights(const MultibandImage& guide, const SolverConfig& cfg) {
    auto window = cfg.window();
    if (cfg.weight_mode == WeightMode::Unit) return NlprWeights::unit(guide.grid, window);
    return compute_weights(guide, window, cfg.K, cfg.h, cfg.drop_tiny_weights);
}

void IterationLog::write_csv(std::ostream& os, bool zero_ms) const {
    os << "iter,objective,r1,r2,r3,ms\n";
    std::ostringstream line;
    line.precision(17);
    for (const auto& r : rows) {
        line.str("");
        line << r.iter << ',' << r.objective << ',' << r.r1 << ',' << r.r2 << ',' << r.r3 << ','
             << (zero_ms ? 0.0 : r.ms) << '\n';
        os << line.str();
    }
}

double AdmmSolver::state_bytes(int n_pixels, int Ls, int n_filters) {
    return 2.0 * (2.0 + n_filters) * static_cast<double>(n_pixels) * Ls * sizeof(double);
}

AdmmSolver::AdmmSolver(Eigen::MatrixXd Yl, Eigen::MatrixXd Yh, FusionOperators ops,
                       NlprWeights weights, SolverConfig cfg)
    : Yl_(std::move(Yl)),
      Yh_(std::move(Yh)),
      ops_(std::move(ops)),
      weights_(std::move(weights)),
      cfg_(cfg) {
    cfg_.validate();
    const Grid& g = ops_.S.grid;
    const int Ls = cfg_.Ls;
    const auto& E = ops_.E.E;
    const auto& R = ops_.R.R;

    if (E.rows() != Ls) throw std::invalid_argument("solver: E rows must equal L_s");
    if (R.rows() != E.cols()) throw std::invalid_argument("solver: R rows must equal L_l");
    if (Yl_.rows() != ops_.S.kept() || Yl_.cols() != E.cols())
        throw std::invalid_argument("solver: Y_l shape mismatch");
    if (Yh_.rows() != g.pixels() || Yh_.cols() != R.cols())
        throw std::invalid_argument("solver: Y_h shape mismatch");
    if (weights_.grid != g) throw std::invalid_argument("solver: weights grid mismatch");
    auto window = cfg_.window();
    if (weights_.shifts != window)
        throw std::invalid_argument("solver: weights window does not match config");
    // Keep the two taps of every filter distinct on this grid.
    if (g.p <= 2 * (cfg_.S + cfg_.K) || g.q <= 2 * (cfg_.S + cfg_.K))
        throw std::invalid_argument("solver: grid too small for the chosen S and K");

    const double budget = cfg_.mem_budget_mb * 1024.0 * 1024.0;
    const int nf = static_cast<int>(window.size()) *
                   (2 * cfg_.reg_patch_radius() + 1) * (2 * cfg_.reg_patch_radius() + 1);
    const double need = state_bytes(g.pixels(), Ls, nf);
    if (need > budget) {
        std::ostringstream msg;
        msg << "solver: estimated state " << need / (1024.0 * 1024.0) << " MB exceeds budget "
            << cfg_.mem_budget_mb << " MB";
        throw std::runtime_error(msg.str());
    }

    filters_ = build_difference_filters(std::span<const Shift>(window), cfg_.reg_patch_radius());
    plan_ = plan(g, ops_.B, filters_);

    er_ = E * R;  // L_s x L_h
    F_ = (Eigen::MatrixXd::Identity(Ls, Ls) + (cfg_.lambda1 / cfg_.rho) * er_ * er_.transpose())
             .ldlt()
             .solve(Eigen::MatrixXd::Identity(Ls, Ls));
    G_ = (E * E.transpose() + cfg_.rho * Eigen::MatrixXd::Identity(Ls, Ls))
             .ldlt()
             .solve(Eigen::MatrixXd::Identity(Ls, Ls));

    styl_et_ = Eigen::MatrixXd::Zero(g.pixels(), Ls);
    Eigen::MatrixXd yl_et = Yl_ * E.transpose();
    for (int r = 0; r < ops_.S.kept(); ++r) styl_et_.row(ops_.S.kept_rows[r]) = yl_et.row(r);
    yh_term_ = (cfg_.lambda1 / cfg_.rho) * Yh_ * R.transpose() * E.transpose();
}

AdmmState AdmmSolver::init_state() const {
    const Grid& g = grid();
    const int Ls = cfg_.Ls;
    AdmmState s;
    s.X = MultibandImage(g, Ls);
    s.P1 = MultibandImage(g, Ls);
    s.P2 = MultibandImage(g, Ls);
    s.L1 = MultibandImage(g, Ls);
    s.L2 = MultibandImage(g, Ls);
    s.Q.assign(filters_.size(), MultibandImage(g, Ls));
    s.Sig.assign(filters_.size(), MultibandImage(g, Ls));

    if (cfg_.init_mode == InitMode::Upsample && ops_.S.factor >= 1) {
        // X0 from the bicubic-upsampled low-res observation lifted to the
        // subspace; primal blocks start feasible at X0, duals at zero.
        const int d = ops_.S.factor;
        Grid low(g.p / d, g.q / d);
        MultibandImage yl_img(low, Yl_);
        MultibandImage z0 = d > 1 ? upsample_bicubic(yl_img, d) : yl_img;
        s.X.data = z0.data * ops_.E.E.transpose();
        s.P1 = apply_blur(ops_.B, s.X);
        s.P2 = s.X;
        for (std::size_t f = 0; f < filters_.size(); ++f)
            s.Q[f] = apply_difference(filters_[f], s.X);
    }
    return s;
}

MultibandImage AdmmSolver::assemble_rhs(const AdmmState& s) const {
    MultibandImage tmp(grid(), cfg_.Ls);
    tmp.data = s.P1.data + s.L1.data;
    MultibandImage C = apply_blur_adjoint(ops_.B, tmp);
    C.data += s.P2.data + s.L2.data;
    for (std::size_t f = 0; f < filters_.size(); ++f) {
        tmp.data = s.Q[f].data + s.Sig[f].data;
        add_difference_adjoint(filters_[f], tmp, C);
    }
    return C;
}

void AdmmSolver::x_update(AdmmState& s) const {
    s.X = solve_x_system(plan_, assemble_rhs(s));
}

void AdmmSolver::p1_update(AdmmState& s) const {
    MultibandImage bx = apply_blur(ops_.B, s.X);
    Eigen::MatrixXd off = bx.data - s.L1.data;  // off-mask rows keep BX - L1
    s.P1.data = off;
    for (int r : ops_.S.kept_rows)
        s.P1.data.row(r) = (cfg_.rho * off.row(r) + styl_et_.row(r)) * G_;
}

void AdmmSolver::p2_update(AdmmState& s) const {
    s.P2.data = (s.X.data - s.L2.data + yh_term_) * F_;
}

void AdmmSolver::q_update(AdmmState& s) const {
    const auto kind = cfg_.penalty_mode;
    if (kind == PenaltyKind::WeightedL2) {
        // Group prox across the (k, band) entries of each tau.
        std::size_t i = 0;
        while (i < filters_.size()) {
            std::size_t j = i;
            while (j < filters_.size() && filters_[j].tau == filters_[i].tau) {
                s.Q[j] = apply_difference(filters_[j], s.X);
                s.Q[j].data -= s.Sig[j].data;
                ++j;
            }
            q_prox_group_l2(std::span<MultibandImage>(s.Q.data() + i, j - i), weights_,
                            filters_[i].tau_index, cfg_.lambda2, cfg_.rho);
            i = j;
        }
        return;
    }
    for (std::size_t f = 0; f < filters_.size(); ++f) {
        MultibandImage qt = apply_difference(filters_[f], s.X);
        qt.data -= s.Sig[f].data;
        s.Q[f] = kind == PenaltyKind::WeightedL1
                     ? q_prox(qt, weights_, filters_[f].tau_index, cfg_.lambda2, cfg_.rho)
                     : q_prox_squared_l2(qt, weights_, filters_[f].tau_index, cfg_.lambda2,
                                         cfg_.rho);
    }
}

void AdmmSolver::dual_update(AdmmState& s) const {
    MultibandImage bx = apply_blur(ops_.B, s.X);
    s.L1.data -= bx.data - s.P1.data;
    s.L2.data -= s.X.data - s.P2.data;
    for (std::size_t f = 0; f < filters_.size(); ++f) {
        MultibandImage dx = apply_difference(filters_[f], s.X);
        s.Sig[f].data -= dx.data - s.Q[f].data;
    }
}

double AdmmSolver::objective(const MultibandImage& X) const {
    // B commutes with the band mixing E, so S B (X E) = rows(B X) E.
    MultibandImage bx = apply_blur(ops_.B, X);
    Eigen::MatrixXd res_l = Yl_ - downsample(ops_.S, bx) * ops_.E.E;
    double obj = 0.5 * res_l.squaredNorm();
    if (cfg_.lambda1 > 0) obj += 0.5 * cfg_.lambda1 * (Yh_ - X.data * er_).squaredNorm();
    obj += cfg_.lambda2 * regularizer_value(X, weights_, filters_, cfg_.penalty_mode);
    return obj;
}

double AdmmSolver::augmented_lagrangian(const AdmmState& s) const {
    Eigen::MatrixXd res_l = Yl_ - downsample(ops_.S, s.P1) * ops_.E.E;
    double L = 0.5 * res_l.squaredNorm();
    if (cfg_.lambda1 > 0) L += 0.5 * cfg_.lambda1 * (Yh_ - s.P2.data * er_).squaredNorm();
    L += cfg_.lambda2 * penalty_value(s.Q, weights_, filters_, cfg_.penalty_mode);

    MultibandImage bx = apply_blur(ops_.B, s.X);
    L += 0.5 * cfg_.rho * (s.P1.data - bx.data + s.L1.data).squaredNorm();
    L += 0.5 * cfg_.rho * (s.P2.data - s.X.data + s.L2.data).squaredNorm();
    for (std::size_t f = 0; f < filters_.size(); ++f) {
        MultibandImage dx = apply_difference(filters_[f], s.X);
        L += 0.5 * cfg_.rho * (s.Q[f].data - dx.data + s.Sig[f].data).squaredNorm();
    }
    return L;
}

AdmmSolver::Residuals AdmmSolver::residuals(const AdmmState& s) const {
    constexpr double eps = 1e-12;
    Residuals r;
    MultibandImage bx = apply_blur(ops_.B, s.X);
    r.abs1 = (bx.data - s.P1.data).norm();
    r.rel1 = r.abs1 / std::max(std::max(bx.data.norm(), s.P1.data.norm()), eps);
    r.abs2 = (s.X.data - s.P2.data).norm();
    r.rel2 = r.abs2 / std::max(std::max(s.X.data.norm(), s.P2.data.norm()), eps);
    double gap = 0, na = 0, nb = 0;
    for (std::size_t f = 0; f < filters_.size(); ++f) {
        MultibandImage dx = apply_difference(filters_[f], s.X);
        gap += (dx.data - s.Q[f].data).norm();
        na += dx.data.norm();
        nb += s.Q[f].data.norm();
    }
    r.abs3 = gap;
    r.rel3 = gap / std::max(std::max(na, nb), eps);
    return r;
}

void AdmmSolver::check_finite(const AdmmState& s) const {
    auto fail = [&](const char* block) {
        std::ostringstream msg;
        msg << "solver: non-finite value in " << block << " at iteration " << s.iter;
        throw std::runtime_error(msg.str());
    };
    if (!s.X.data.allFinite()) fail("X");
    if (!s.P1.data.allFinite()) fail("P1");
    if (!s.P2.data.allFinite()) fail("P2");
    if (!s.L1.data.allFinite()) fail("Lambda1");
    if (!s.L2.data.allFinite()) fail("Lambda2");
    for (const auto& q : s.Q)
        if (!q.data.allFinite()) fail("Q");
    for (const auto& sg : s.Sig)
        if (!sg.data.allFinite()) fail("Sigma");
}

SolveResult AdmmSolver::solve(bool dense_x) {
    using clock = std::chrono::steady_clock;
    AdmmState s = init_state();
    SolveResult out;
    for (int t = 1; t <= cfg_.max_iters; ++t) {
        auto t0 = clock::now();
        s.iter = t;
        if (dense_x)
            s.X = solve_x_dense(assemble_rhs(s));
        else
            x_update(s);
        p1_update(s);
        p2_update(s);
        q_update(s);
        dual_update(s);
        check_finite(s);

        Residuals r = residuals(s);
        IterationRecord rec;
        rec.iter = t;
        rec.objective = objective(s.X);
        rec.r1 = r.abs1;
        rec.r2 = r.abs2;
        rec.r3 = r.abs3;
        rec.ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        out.log.rows.push_back(rec);
        out.iterations = t;
        if (r.rel_max() < cfg_.tol_primal) {
            out.converged = true;
            break;
        }
    }
    out.X = s.X;
    out.Z = s.X.data * ops_.E.E;
    return out;
}

MultibandImage apply_x_operator(const BlurFilter& B, std::span<const DifferenceFilter> filters,
                                const MultibandImage& X) {
    MultibandImage out = apply_blur_adjoint(B, apply_blur(B, X));
    out.data += X.data;
    for (const auto& f : filters) add_difference_adjoint(f, apply_difference(f, X), out);
    return out;
}

MultibandImage apply_x_operator_patch(const BlurFilter& B, std::span<const Shift> window, int K,
                                      const MultibandImage& X) {
    const Grid& g = X.grid;
    MultibandImage out = apply_blur_adjoint(B, apply_blur(B, X));
    out.data += X.data;
    // sum_{i,tau} P_{i,tau}^T P_{i,tau} X, one patch difference at a time.
    for (const auto& tau : window) {
        for (int i1 = 0; i1 < g.p; ++i1)
            for (int i2 = 0; i2 < g.q; ++i2)
                for (int c = 0; c < X.bands(); ++c)
                    for (int k1 = -K; k1 <= K; ++k1)
                        for (int k2 = -K; k2 <= K; ++k2) {
                            const int a = g.index(i1 - k1, i2 - k2);
                            const int b = g.index(i1 - tau[0] - k1, i2 - tau[1] - k2);
                            const double v = X.data(a, c) - X.data(b, c);
                            out.data(a, c) += v;
                            out.data(b, c) -= v;
                        }
    }
    return out;
}

Eigen::MatrixXd dense_x_matrix(const Grid& g, const BlurFilter& B,
                               std::span<const DifferenceFilter> filters) {
    const int n = g.pixels();
    if (n > 400) throw std::invalid_argument("dense oracle: grid larger than 400 pixels");
    Eigen::MatrixXd A(n, n);
    MultibandImage e(g, 1);
    for (int j = 0; j < n; ++j) {
        e.data.setZero();
        e.data(j, 0) = 1.0;
        A.col(j) = apply_x_operator(B, filters, e).data.col(0);
    }
    return A;
}

MultibandImage solve_x_cg(const BlurFilter& B, std::span<const DifferenceFilter> filters,
                          std::span<const Shift> window, int K, const MultibandImage& C,
                          double tol, int max_iters, CgRoute route, int* iters) {
    auto apply = [&](const MultibandImage& v) {
        return route == CgRoute::Filters ? apply_x_operator(B, filters, v)
                                         : apply_x_operator_patch(B, window, K, v);
    };
    MultibandImage x(C.grid, C.bands());
    Eigen::MatrixXd r = C.data;  // x0 = 0
    Eigen::MatrixXd p = r;
    double rs = r.squaredNorm();
    const double stop = tol * tol * C.data.squaredNorm();
    int t = 0;
    MultibandImage pd(C.grid, C.bands());
    while (t < max_iters && rs > stop) {
        pd.data = p;
        Eigen::MatrixXd ap = apply(pd).data;
        const double alpha = rs / p.cwiseProduct(ap).sum();
        x.data += alpha * p;
        r -= alpha * ap;
        const double rs_new = r.squaredNorm();
        p = r + (rs_new / rs) * p;
        rs = rs_new;
        ++t;
    }
    if (iters) *iters = t;
    return x;
}

MultibandImage AdmmSolver::apply_x_operator(const MultibandImage& X) const {
    return nlpr::apply_x_operator(ops_.B, filters_, X);
}

MultibandImage AdmmSolver::apply_x_operator_patch(const MultibandImage& X) const {
    return nlpr::apply_x_operator_patch(ops_.B, weights_.shifts, cfg_.reg_patch_radius(), X);
}

Eigen::MatrixXd AdmmSolver::dense_x_matrix() const {
    return nlpr::dense_x_matrix(grid(), ops_.B, filters_);
}

MultibandImage AdmmSolver::solve_x_dense(const MultibandImage& C) const {
    if (!dense_ready_) {
        dense_llt_.compute(dense_x_matrix());
        dense_ready_ = true;
    }
    MultibandImage X(C.grid, C.bands());
    X.data = dense_llt_.solve(C.data);
    return X;
}

SolveResult solve(const Eigen::MatrixXd& Yl, const Eigen::MatrixXd& Yh,
                  const FusionOperators& ops, const NlprWeights& weights,
                  const SolverConfig& cfg) {
    AdmmSolver solver(Yl, Yh, ops, weights, cfg);
    return solver.solve();
}

SolveResult dense_oracle_solve(const Eigen::MatrixXd& Yl, const Eigen::MatrixXd& Yh,
                               const FusionOperators& ops, const NlprWeights& weights,
                               const SolverConfig& cfg) {
    if (ops.S.grid.pixels() > 400)
        throw std::invalid_argument("dense oracle: grid larger than 400 pixels");
    AdmmSolver solver(Yl, Yh, ops, weights, cfg);
    return solver.solve(/*dense_x=*/true);
}

namespace {

// Catmull-Rom weight for |t| <= 2.
double catmull_rom(double t) {
    t = std::abs(t);
    if (t <= 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

}  // namespace

MultibandImage upsample_bicubic(const MultibandImage& low, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample: factor must be >= 1");
    if (factor == 1) return low;
    const Grid& lg = low.grid;
    Grid hg(lg.p * factor, lg.q * factor);
    MultibandImage out(hg, low.bands());
    for (int i1 = 0; i1 < hg.p; ++i1) {
        const int b1 = i1 / factor;
        const double f1 = static_cast<double>(i1 % factor) / factor;
        double w1[4];
        for (int a = -1; a <= 2; ++a) w1[a + 1] = catmull_rom(f1 - a);
        for (int i2 = 0; i2 < hg.q; ++i2) {
            const int b2 = i2 / factor;
            const double f2 = static_cast<double>(i2 % factor) / factor;
            double w2[4];
            for (int a = -1; a <= 2; ++a) w2[a + 1] = catmull_rom(f2 - a);
            for (int c = 0; c < low.bands(); ++c) {
                double v = 0;
                for (int a = -1; a <= 2; ++a)
                    for (int b = -1; b <= 2; ++b)
                        v += w1[a + 1] * w2[b + 1] * low.data(lg.index(b1 + a, b2 + b), c);
                out.data(i1 * hg.q + i2, c) = v;
            }
        }
    }
    return out;
}

}  // namespace nlpr
