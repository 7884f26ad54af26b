#include "nlpr/metrics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace nlpr {

namespace {

constexpr double kPsnrCap = 99.0;

// Separable circular convolution of one band with a symmetric 1-D kernel.
Eigen::VectorXd filter_separable(const Grid& g, const Eigen::VectorXd& x,
                                 const std::vector<double>& w, int radius) {
    Eigen::VectorXd tmp(g.pixels()), out(g.pixels());
    for (int i1 = 0; i1 < g.p; ++i1)
        for (int i2 = 0; i2 < g.q; ++i2) {
            double v = 0;
            for (int a = -radius; a <= radius; ++a)
                v += w[a + radius] * x[Grid::wrap(i1 - a, g.p) * g.q + i2];
            tmp[i1 * g.q + i2] = v;
        }
    for (int i1 = 0; i1 < g.p; ++i1)
        for (int i2 = 0; i2 < g.q; ++i2) {
            double v = 0;
            for (int b = -radius; b <= radius; ++b)
                v += w[b + radius] * tmp[i1 * g.q + Grid::wrap(i2 - b, g.q)];
            out[i1 * g.q + i2] = v;
        }
    return out;
}

double sam_mean_degrees(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& est) {
    double total = 0;
    Eigen::VectorXd u, v;
    for (Eigen::Index i = 0; i < ref.rows(); ++i) {
        const double na = ref.row(i).norm();
        const double nb = est.row(i).norm();
        if (na <= 1e-300 || nb <= 1e-300) continue;  // undefined angle counts as 0
        u = ref.row(i) / na;
        v = est.row(i) / nb;
        // 2 atan2(|u-v|, |u+v|) is exact at 0 and stable near 0 and pi,
        // unlike acos of the normalized inner product.
        total += 2.0 * std::atan2((u - v).norm(), (u + v).norm());
    }
    return total / ref.rows() * 180.0 / std::numbers::pi;
}

double uiqi_band(const Grid& g, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const int wp = std::min(8, g.p);
    const int wq = std::min(8, g.q);
    const double n = static_cast<double>(wp) * wq;
    double total = 0;
    for (int i1 = 0; i1 < g.p; ++i1)
        for (int i2 = 0; i2 < g.q; ++i2) {
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, gap = 0;
            for (int a = 0; a < wp; ++a) {
                const int r = Grid::wrap(i1 + a, g.p) * g.q;
                for (int b = 0; b < wq; ++b) {
                    const double xv = x[r + Grid::wrap(i2 + b, g.q)];
                    const double yv = y[r + Grid::wrap(i2 + b, g.q)];
                    sx += xv;
                    sy += yv;
                    sxx += xv * xv;
                    syy += yv * yv;
                    sxy += xv * yv;
                    gap += std::abs(xv - yv);
                }
            }
            const double mx = sx / n, my = sy / n;
            const double vx = sxx / n - mx * mx;
            const double vy = syy / n - my * my;
            const double cxy = sxy / n - mx * my;
            const double den = (vx + vy) * (mx * mx + my * my);
            if (den <= 0)
                total += gap == 0 ? 1.0 : 0.0;  // degenerate window
            else
                total += 4.0 * cxy * mx * my / den;
        }
    return total / g.pixels();
}

double ssim_band(const Grid& g, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                 double dynamic_range) {
    const int radius = 5;  // 11-tap Gaussian, sigma 1.5
    std::vector<double> w(2 * radius + 1);
    double wsum = 0;
    for (int a = -radius; a <= radius; ++a) {
        w[a + radius] = std::exp(-a * a / (2.0 * 1.5 * 1.5));
        wsum += w[a + radius];
    }
    for (auto& v : w) v /= wsum;

    const double L = std::max(dynamic_range, 1e-12);
    const double c1 = (0.01 * L) * (0.01 * L);
    const double c2 = (0.03 * L) * (0.03 * L);

    Eigen::VectorXd mx = filter_separable(g, x, w, radius);
    Eigen::VectorXd my = filter_separable(g, y, w, radius);
    Eigen::VectorXd mxx = filter_separable(g, Eigen::VectorXd(x.cwiseProduct(x)), w, radius);
    Eigen::VectorXd myy = filter_separable(g, Eigen::VectorXd(y.cwiseProduct(y)), w, radius);
    Eigen::VectorXd mxy = filter_separable(g, Eigen::VectorXd(x.cwiseProduct(y)), w, radius);

    double total = 0;
    for (int i = 0; i < g.pixels(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cxy = mxy[i] - mx[i] * my[i];
        total += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return total / g.pixels();
}

}  // namespace

MetricReport evaluate(const MultibandImage& reference, const MultibandImage& estimate,
                      int resolution_ratio) {
    if (reference.grid != estimate.grid || reference.bands() != estimate.bands())
        throw std::invalid_argument("metrics: shape mismatch");
    if (resolution_ratio < 1) throw std::invalid_argument("metrics: resolution ratio must be >= 1");

    const Grid& g = reference.grid;
    const int L = reference.bands();
    const Eigen::MatrixXd& ref = reference.data;
    const Eigen::MatrixXd& est = estimate.data;
    MetricReport rep;

    Eigen::MatrixXd diff = ref - est;
    rep.rmse = std::sqrt(diff.squaredNorm() / diff.size());

    // ERGAS over bands with usable means.
    double ergas_acc = 0;
    int ergas_bands = 0;
    const double mean_floor = 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff());
    for (int c = 0; c < L; ++c) {
        const double mu = ref.col(c).mean();
        if (std::abs(mu) <= mean_floor) {
            std::ostringstream w;
            w << "ergas: band " << c << " has zero mean and was excluded";
            rep.warnings.push_back(w.str());
            continue;
        }
        const double rmse_c = std::sqrt(diff.col(c).squaredNorm() / g.pixels());
        ergas_acc += (rmse_c / mu) * (rmse_c / mu);
        ++ergas_bands;
    }
    rep.ergas = ergas_bands > 0
                    ? 100.0 / resolution_ratio * std::sqrt(ergas_acc / ergas_bands)
                    : 0.0;

    rep.sam_degrees = sam_mean_degrees(ref, est);

    double uiqi_acc = 0, ssim_acc = 0, psnr_acc = 0;
    const double range = ref.maxCoeff() - ref.minCoeff();
    for (int c = 0; c < L; ++c) {
        uiqi_acc += uiqi_band(g, ref.col(c), est.col(c));
        ssim_acc += ssim_band(g, ref.col(c), est.col(c), range);
        const double mse = diff.col(c).squaredNorm() / g.pixels();
        double peak = ref.col(c).maxCoeff();
        if (peak <= 0) peak = std::max(ref.col(c).cwiseAbs().maxCoeff(), 1e-12);
        psnr_acc += mse == 0 ? kPsnrCap
                             : std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
    }
    rep.uiqi = uiqi_acc / L;
    rep.ssim = ssim_acc / L;
    rep.psnr_db = psnr_acc / L;
    return rep;
}

std::string MetricReport::csv_header() { return "rmse,ergas,sam_degrees,uiqi,psnr_db,ssim"; }

std::string MetricReport::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << rmse << ',' << ergas << ',' << sam_degrees << ',' << uiqi << ',' << psnr_db << ','
       << ssim;
    return os.str();
}

std::string MetricReport::pretty() const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6);
    os << "RMSE   " << std::setw(12) << rmse << "\n"
       << "ERGAS  " << std::setw(12) << ergas << "\n"
       << "SAM    " << std::setw(12) << sam_degrees << " deg\n"
       << "UIQI   " << std::setw(12) << uiqi << "\n"
       << "PSNR   " << std::setw(12) << psnr_db << " dB\n"
       << "SSIM   " << std::setw(12) << ssim << "\n";
    return os.str();
}

}  // namespace nlpr
