#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracles {

using nlpr::Grid;

MultibandImage random_image(const Grid& g, int bands, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    MultibandImage img(g, bands);
    for (int c = 0; c < bands; ++c)
        for (int i = 0; i < g.pixels(); ++i) img.data(i, c) = unif(rng);
    return img;
}

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = unif(rng);
    return m;
}

MultibandImage naive_convolve(const BlurFilter& B, const MultibandImage& img) {
    const Grid& g = img.grid;
    MultibandImage out(g, img.bands());
    for (int c = 0; c < img.bands(); ++c)
        for (int i1 = 0; i1 < g.p; ++i1)
            for (int i2 = 0; i2 < g.q; ++i2) {
                double v = 0;
                for (const auto& t : B.taps)
                    v += t.value * img.data(g.index(i1 - t.offset[0], i2 - t.offset[1]), c);
                out.data(g.index(i1, i2), c) = v;
            }
    return out;
}

Eigen::MatrixXd dense_blur_matrix(const Grid& g, const BlurFilter& B) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.pixels(), g.pixels());
    for (int j = 0; j < g.pixels(); ++j) {
        auto pc = g.coords(j);
        for (const auto& t : B.taps)
            A(g.index(pc[0] + t.offset[0], pc[1] + t.offset[1]), j) += t.value;
    }
    return A;
}

Eigen::MatrixXd dense_difference_matrix(const Grid& g, const DifferenceFilter& f) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.pixels(), g.pixels());
    for (int j = 0; j < g.pixels(); ++j) {
        auto pc = g.coords(j);
        A(g.index(pc[0] + f.k[0], pc[1] + f.k[1]), j) += 1.0;
        A(g.index(pc[0] + f.tau[0] + f.k[0], pc[1] + f.tau[1] + f.k[1]), j) -= 1.0;
    }
    return A;
}

Eigen::MatrixXd dense_sampling_matrix(const nlpr::SamplingMask& S) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(S.kept(), S.grid.pixels());
    for (int r = 0; r < S.kept(); ++r) A(r, S.kept_rows[r]) = 1.0;
    return A;
}

Eigen::MatrixXd dense_x_system(const Grid& g, const BlurFilter& B,
                               std::span<const DifferenceFilter> filters) {
    Eigen::MatrixXd Bm = dense_blur_matrix(g, B);
    Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(g.pixels(), g.pixels()) + Bm.transpose() * Bm;
    for (const auto& f : filters) {
        Eigen::MatrixXd D = dense_difference_matrix(g, f);
        A += D.transpose() * D;
    }
    return A;
}

namespace {

// Three-stage grid search on a 1-D convex objective, final step 1e-6.
template <typename F>
double grid_search(F&& J, double lo, double hi) {
    double best = lo;
    for (double step : {1e-2, 1e-4, 1e-6}) {
        double best_val = std::numeric_limits<double>::infinity();
        double from = std::max(lo, best - 200 * step);
        double to = std::min(hi, best + 200 * step);
        if (step == 1e-2) {
            from = lo;
            to = hi;
        }
        for (double x = from; x <= to + step / 2; x += step) {
            double v = J(x);
            if (v < best_val) {
                best_val = v;
                best = x;
            }
        }
    }
    return best;
}

}  // namespace

double prox_grid_search(double v, double w, double lambda2, double rho) {
    auto J = [&](double q) { return lambda2 * w * std::abs(q) + 0.5 * rho * (q - v) * (q - v); };
    double lo = std::min(0.0, v) - 1e-2;
    double hi = std::max(0.0, v) + 1e-2;
    return grid_search(J, lo, hi);
}

double group_prox_grid_search(double vnorm, double w, double lambda2, double rho) {
    auto J = [&](double t) { return lambda2 * w * t + 0.5 * rho * (t - vnorm) * (t - vnorm); };
    return grid_search(J, 0.0, vnorm + 1e-2);
}

double patch_regularizer(const MultibandImage& X, const nlpr::NlprWeights& w, int K,
                         nlpr::PenaltyKind kind) {
    const Grid& g = X.grid;
    nlpr::PatchSpec spec(K);
    double total = 0;
    for (int i1 = 0; i1 < g.p; ++i1)
        for (int i2 = 0; i2 < g.q; ++i2)
            for (std::size_t t = 0; t < w.shifts.size(); ++t) {
                Eigen::VectorXd d = nlpr::patch_difference(X, {i1, i2}, w.shifts[t], spec);
                const double om = w.values(g.index(i1, i2), static_cast<int>(t));
                switch (kind) {
                    case nlpr::PenaltyKind::WeightedL1: total += om * d.lpNorm<1>(); break;
                    case nlpr::PenaltyKind::WeightedL2: total += om * d.norm(); break;
                    case nlpr::PenaltyKind::SquaredL2: total += om * d.squaredNorm(); break;
                }
            }
    return total;
}

double fusion_objective(const MultibandImage& X, const Eigen::MatrixXd& Yl,
                        const Eigen::MatrixXd& Yh, const nlpr::FusionOperators& ops,
                        const nlpr::NlprWeights& w, const nlpr::SolverConfig& cfg) {
    MultibandImage bx = nlpr::apply_blur(ops.B, X);
    Eigen::MatrixXd res_l = Yl - nlpr::downsample(ops.S, bx) * ops.E.E;
    double obj = 0.5 * res_l.squaredNorm();
    Eigen::MatrixXd er = ops.E.E * ops.R.R;
    if (cfg.lambda1 > 0) obj += 0.5 * cfg.lambda1 * (Yh - X.data * er).squaredNorm();
    // Filter-form regularizer; its equality with the patch definition is
    // certified separately against patch_regularizer.
    auto window = cfg.window();
    auto filters = nlpr::build_difference_filters(std::span<const nlpr::Shift>(window),
                                                  cfg.reg_patch_radius());
    obj += cfg.lambda2 * nlpr::regularizer_value(X, w, filters, cfg.penalty_mode);
    return obj;
}

SubgradientResult subgradient_solve(const Eigen::MatrixXd& Yl, const Eigen::MatrixXd& Yh,
                                    const nlpr::FusionOperators& ops,
                                    const nlpr::NlprWeights& w, const nlpr::SolverConfig& cfg,
                                    int iterations) {
    const Grid& g = ops.S.grid;
    const int Ls = cfg.Ls;
    auto window = cfg.window();
    auto filters = nlpr::build_difference_filters(std::span<const nlpr::Shift>(window),
                                                  cfg.reg_patch_radius());
    Eigen::MatrixXd er = ops.E.E * ops.R.R;

    auto smooth_grad = [&](const MultibandImage& X) {
        MultibandImage bx = nlpr::apply_blur(ops.B, X);
        Eigen::MatrixXd r = nlpr::downsample(ops.S, bx) * ops.E.E - Yl;
        MultibandImage up = nlpr::upsample_adjoint(ops.S, Eigen::MatrixXd(r * ops.E.E.transpose()));
        Eigen::MatrixXd grad = nlpr::apply_blur_adjoint(ops.B, up).data;
        if (cfg.lambda1 > 0) grad += cfg.lambda1 * (X.data * er - Yh) * er.transpose();
        return grad;
    };

    auto reg_subgrad = [&](const MultibandImage& X) {
        MultibandImage out(g, Ls);
        MultibandImage sgn(g, Ls);
        for (const auto& f : filters) {
            MultibandImage d = nlpr::apply_difference(f, X);
            sgn.data = d.data.array().sign().colwise() *
                       (cfg.lambda2 * w.values.col(f.tau_index).array());
            nlpr::add_difference_adjoint(f, sgn, out);
        }
        return out;
    };

    auto objective = [&](const MultibandImage& X) {
        return fusion_objective(X, Yl, Yh, ops, w, cfg);
    };

    // Lipschitz estimate of the smooth Hessian by power iteration.
    MultibandImage v = random_image(g, Ls, 99);
    double L = 1.0;
    for (int it = 0; it < 25; ++it) {
        MultibandImage bx = nlpr::apply_blur(ops.B, v);
        Eigen::MatrixXd r = nlpr::downsample(ops.S, bx) * ops.E.E;
        MultibandImage up = nlpr::upsample_adjoint(ops.S, Eigen::MatrixXd(r * ops.E.E.transpose()));
        Eigen::MatrixXd hv = nlpr::apply_blur_adjoint(ops.B, up).data;
        hv += cfg.lambda1 * (v.data * er) * er.transpose();
        L = hv.norm() / v.data.norm();
        v.data = hv / hv.norm();
    }
    L = std::max(L, 1e-8) * 1.2;

    // Warm start: plain gradient descent on the smooth part.
    MultibandImage X(g, Ls);
    for (int t = 0; t < 400; ++t) X.data -= (1.0 / L) * smooth_grad(X);

    SubgradientResult best;
    best.best_X = X;
    best.best_objective = objective(X);

    auto run = [&](MultibandImage start, double a, int iters) {
        MultibandImage Xc = std::move(start);
        for (int t = 1; t <= iters; ++t) {
            Eigen::MatrixXd gsub = smooth_grad(Xc) + reg_subgrad(Xc).data;
            Xc.data -= (a / std::sqrt(static_cast<double>(t))) * gsub;
            const double obj = objective(Xc);
            if (obj < best.best_objective) {
                best.best_objective = obj;
                best.best_X = Xc;
            }
        }
    };

    // Pilot runs pick the step scale, the remaining budget refines.
    const int pilot = std::max(500, iterations / 20);
    double best_a = 1.0 / L;
    double best_pilot = std::numeric_limits<double>::infinity();
    for (double a : {2.0 / L, 0.5 / L, 0.1 / L, 0.02 / L}) {
        run(best.best_X, a, pilot);
        if (best.best_objective < best_pilot) {
            best_pilot = best.best_objective;
            best_a = a;
        }
    }
    run(best.best_X, best_a, iterations);
    return best;
}

nlpr::MetricReport reference_metrics(const MultibandImage& ref, const MultibandImage& est,
                                     int ratio) {
    const Grid& g = ref.grid;
    const int L = ref.bands();
    const int n = g.pixels();
    nlpr::MetricReport rep;

    double se = 0;
    for (int c = 0; c < L; ++c)
        for (int i = 0; i < n; ++i) {
            double d = ref.data(i, c) - est.data(i, c);
            se += d * d;
        }
    rep.rmse = std::sqrt(se / (static_cast<double>(n) * L));

    double ergas = 0;
    int used = 0;
    double maxabs = 1.0;
    for (int c = 0; c < L; ++c)
        for (int i = 0; i < n; ++i) maxabs = std::max(maxabs, std::abs(ref.data(i, c)));
    for (int c = 0; c < L; ++c) {
        double mu = 0, mse = 0;
        for (int i = 0; i < n; ++i) {
            mu += ref.data(i, c);
            double d = ref.data(i, c) - est.data(i, c);
            mse += d * d;
        }
        mu /= n;
        mse /= n;
        if (std::abs(mu) <= 1e-12 * maxabs) continue;
        ergas += mse / (mu * mu);
        ++used;
    }
    rep.ergas = used ? 100.0 / ratio * std::sqrt(ergas / used) : 0.0;

    double sam = 0;
    for (int i = 0; i < n; ++i) {
        double aa = 0, bb = 0, ab = 0;
        for (int c = 0; c < L; ++c) {
            aa += ref.data(i, c) * ref.data(i, c);
            bb += est.data(i, c) * est.data(i, c);
            ab += ref.data(i, c) * est.data(i, c);
        }
        if (aa <= 1e-300 || bb <= 1e-300) continue;
        sam += std::acos(std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0));
    }
    rep.sam_degrees = sam / n * 180.0 / std::numbers::pi;

    // UIQI: periodic 8x8 windows at every position.
    const int wp = std::min(8, g.p), wq = std::min(8, g.q);
    const double wn = static_cast<double>(wp) * wq;
    double uiqi = 0;
    for (int c = 0; c < L; ++c) {
        double acc = 0;
        for (int i1 = 0; i1 < g.p; ++i1)
            for (int i2 = 0; i2 < g.q; ++i2) {
                double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, gap = 0;
                for (int a = 0; a < wp; ++a)
                    for (int b = 0; b < wq; ++b) {
                        double x = ref.data(g.index(i1 + a, i2 + b), c);
                        double y = est.data(g.index(i1 + a, i2 + b), c);
                        sx += x;
                        sy += y;
                        sxx += x * x;
                        syy += y * y;
                        sxy += x * y;
                        gap += std::abs(x - y);
                    }
                double mx = sx / wn, my = sy / wn;
                double vx = sxx / wn - mx * mx, vy = syy / wn - my * my;
                double cxy = sxy / wn - mx * my;
                double den = (vx + vy) * (mx * mx + my * my);
                acc += den <= 0 ? (gap == 0 ? 1.0 : 0.0) : 4.0 * cxy * mx * my / den;
            }
        uiqi += acc / n;
    }
    rep.uiqi = uiqi / L;

    double psnr = 0;
    for (int c = 0; c < L; ++c) {
        double mse = 0, peak = -std::numeric_limits<double>::infinity(), amax = 0;
        for (int i = 0; i < n; ++i) {
            double d = ref.data(i, c) - est.data(i, c);
            mse += d * d;
            peak = std::max(peak, ref.data(i, c));
            amax = std::max(amax, std::abs(ref.data(i, c)));
        }
        mse /= n;
        if (peak <= 0) peak = std::max(amax, 1e-12);
        psnr += mse == 0 ? 99.0 : std::min(99.0, 10.0 * std::log10(peak * peak / mse));
    }
    rep.psnr_db = psnr / L;

    // SSIM: direct 11x11 Gaussian window sums at every pixel (periodic).
    const int rad = 5;
    double wgt[11];
    double wsum = 0;
    for (int a = -rad; a <= rad; ++a) {
        wgt[a + rad] = std::exp(-a * a / 4.5);
        wsum += wgt[a + rad];
    }
    for (double& x : wgt) x /= wsum;
    double range = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (int c = 0; c < L; ++c)
        for (int i = 0; i < n; ++i) {
            range = std::max(range, ref.data(i, c));
            lo = std::min(lo, ref.data(i, c));
        }
    const double Ldyn = std::max(range - lo, 1e-12);
    const double c1 = 0.0001 * Ldyn * Ldyn, c2 = 0.0009 * Ldyn * Ldyn;
    double ssim = 0;
    for (int c = 0; c < L; ++c) {
        double acc = 0;
        for (int i1 = 0; i1 < g.p; ++i1)
            for (int i2 = 0; i2 < g.q; ++i2) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int a = -rad; a <= rad; ++a)
                    for (int b = -rad; b <= rad; ++b) {
                        double wv = wgt[a + rad] * wgt[b + rad];
                        double x = ref.data(g.index(i1 + a, i2 + b), c);
                        double y = est.data(g.index(i1 + a, i2 + b), c);
                        mx += wv * x;
                        my += wv * y;
                        mxx += wv * x * x;
                        myy += wv * y * y;
                        mxy += wv * x * y;
                    }
                double vx = mxx - mx * mx, vy = myy - my * my, cxy = mxy - mx * my;
                acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
        ssim += acc / n;
    }
    rep.ssim = ssim / L;
    return rep;
}

}  // namespace oracles
