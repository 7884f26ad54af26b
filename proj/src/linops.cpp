#include "nlpr/linops.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace nlpr {

double BlurFilter::tap_sum() const {
    double s = 0;
    for (const auto& t : taps) s += t.value;
    return s;
}

BlurFilter BlurFilter::identity() {
    return BlurFilter{{{{0, 0}, 1.0}}, true};
}

BlurFilter BlurFilter::starck_murtagh() {
    const double w[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    BlurFilter b;
    b.normalized = true;
    b.taps.reserve(25);
    for (int a = -2; a <= 2; ++a)
        for (int c = -2; c <= 2; ++c) b.taps.push_back({{a, c}, w[a + 2] * w[c + 2]});
    return b;
}

BlurFilter BlurFilter::gaussian(double sigma, int radius) {
    if (sigma <= 0 || radius < 0) throw std::invalid_argument("blur: bad gaussian parameters");
    BlurFilter b;
    b.normalized = true;
    double sum = 0;
    for (int a = -radius; a <= radius; ++a)
        for (int c = -radius; c <= radius; ++c) {
            double v = std::exp(-(a * a + c * c) / (2 * sigma * sigma));
            b.taps.push_back({{a, c}, v});
            sum += v;
        }
    for (auto& t : b.taps) t.value /= sum;
    return b;
}

namespace {

// Shared tap-convolution core: sign +1 convolves, -1 correlates (adjoint).
MultibandImage convolve_taps(const BlurFilter& B, const MultibandImage& img, int sign) {
    const Grid& g = img.grid;
    MultibandImage out(g, img.bands());
    std::vector<int> src(g.pixels());
    for (const auto& tap : B.taps) {
        const int o1 = sign * tap.offset[0];
        const int o2 = sign * tap.offset[1];
        for (int i1 = 0; i1 < g.p; ++i1) {
            const int s1 = Grid::wrap(i1 - o1, g.p);
            for (int i2 = 0; i2 < g.q; ++i2)
                src[i1 * g.q + i2] = s1 * g.q + Grid::wrap(i2 - o2, g.q);
        }
        for (int c = 0; c < img.bands(); ++c) {
            const double* in = img.data.col(c).data();
            double* dst = out.data.col(c).data();
            for (int i = 0; i < g.pixels(); ++i) dst[i] += tap.value * in[src[i]];
        }
    }
    return out;
}

}  // namespace

MultibandImage apply_blur(const BlurFilter& B, const MultibandImage& img) {
    return convolve_taps(B, img, +1);
}

MultibandImage apply_blur_adjoint(const BlurFilter& B, const MultibandImage& img) {
    return convolve_taps(B, img, -1);
}

SamplingMask SamplingMask::all(const Grid& g) {
    SamplingMask s;
    s.grid = g;
    s.factor = 1;
    s.mask.assign(g.pixels(), 1);
    s.kept_rows.resize(g.pixels());
    for (int i = 0; i < g.pixels(); ++i) s.kept_rows[i] = i;
    return s;
}

SamplingMask SamplingMask::decimation(const Grid& g, int d) {
    if (d < 1) throw std::invalid_argument("mask: decimation factor must be >= 1");
    if (g.p % d != 0 || g.q % d != 0)
        throw std::invalid_argument("mask: factor must divide both grid dimensions");
    SamplingMask s;
    s.grid = g;
    s.factor = d;
    s.mask.assign(g.pixels(), 0);
    for (int a = 0; a * d < g.p; ++a)
        for (int b = 0; b * d < g.q; ++b) {
            int row = (a * d) * g.q + (b * d);
            s.mask[row] = 1;
            s.kept_rows.push_back(row);
        }
    return s;
}

SamplingMask SamplingMask::from_mask(const Grid& g, std::vector<std::uint8_t> m) {
    if (static_cast<int>(m.size()) != g.pixels())
        throw std::invalid_argument("mask: length must equal p*q");
    SamplingMask s;
    s.grid = g;
    s.factor = 0;
    s.mask = std::move(m);
    for (int i = 0; i < g.pixels(); ++i)
        if (s.mask[i]) s.kept_rows.push_back(i);
    return s;
}

Eigen::MatrixXd downsample(const SamplingMask& S, const MultibandImage& img) {
    if (S.grid != img.grid) throw std::invalid_argument("downsample: grid mismatch");
    Eigen::MatrixXd obs(S.kept(), img.bands());
    for (int r = 0; r < S.kept(); ++r) obs.row(r) = img.data.row(S.kept_rows[r]);
    return obs;
}

MultibandImage upsample_adjoint(const SamplingMask& S, const Eigen::MatrixXd& obs) {
    if (obs.rows() != S.kept()) throw std::invalid_argument("upsample: row count mismatch");
    MultibandImage out(S.grid, static_cast<int>(obs.cols()));
    for (int r = 0; r < S.kept(); ++r) out.data.row(S.kept_rows[r]) = obs.row(r);
    return out;
}

SpectralResponse::SpectralResponse(Eigen::MatrixXd r) : R(std::move(r)) {
    if (!R.allFinite()) throw std::invalid_argument("spectral response: non-finite entries");
    if ((R.array() < 0).any())
        throw std::invalid_argument("spectral response: entries must be nonnegative");
}

SpectralResponse SpectralResponse::identity(int bands) {
    return SpectralResponse(Eigen::MatrixXd::Identity(bands, bands));
}

SubspaceBasis SubspaceBasis::identity(int bands) {
    SubspaceBasis b;
    b.E = Eigen::MatrixXd::Identity(bands, bands);
    b.orthonormal_rows = true;
    return b;
}

SubspaceBasis build_subspace(const Eigen::MatrixXd& Yl, int Ls) {
    if (Ls < 1 || Ls > std::min(Yl.rows(), Yl.cols()))
        throw std::invalid_argument("subspace: need 1 <= L_s <= min(n_l, L_l)");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Yl, Eigen::ComputeThinV);
    SubspaceBasis b;
    b.E = svd.matrixV().leftCols(Ls).transpose();
    b.orthonormal_rows = true;
    const auto& sv = svd.singularValues();
    b.rank_deficient = sv(Ls - 1) <= sv(0) * 1e-12;
    return b;
}

std::vector<Shift> window_shifts(int S, bool axis_only, bool include_zero) {
    if (S < 1) throw std::invalid_argument("window: search radius must be >= 1");
    std::vector<Shift> w;
    if (axis_only) {
        w = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
        if (include_zero) w.insert(w.begin() + 2, {0, 0});
        return w;
    }
    for (int t1 = -S; t1 <= S; ++t1)
        for (int t2 = -S; t2 <= S; ++t2) {
            if (t1 == 0 && t2 == 0 && !include_zero) continue;
            w.push_back({t1, t2});
        }
    return w;
}

std::vector<DifferenceFilter> build_difference_filters(std::span<const Shift> window, int K) {
    if (K < 0) throw std::invalid_argument("filters: K must be >= 0");
    std::vector<DifferenceFilter> fs;
    fs.reserve(window.size() * (2 * K + 1) * (2 * K + 1));
    for (int t = 0; t < static_cast<int>(window.size()); ++t)
        for (int k1 = -K; k1 <= K; ++k1)
            for (int k2 = -K; k2 <= K; ++k2) fs.push_back({window[t], {k1, k2}, t});
    return fs;
}

std::vector<DifferenceFilter> build_difference_filters(int S, int K, bool include_zero) {
    auto w = window_shifts(S, false, include_zero);
    return build_difference_filters(std::span<const Shift>(w), K);
}

namespace {

MultibandImage difference_core(const DifferenceFilter& f, const MultibandImage& img, int sign) {
    const Grid& g = img.grid;
    MultibandImage out(g, img.bands());
    // Source rows for the +1 tap (offset k) and the -1 tap (offset tau+k).
    std::vector<int> sa(g.pixels()), sb(g.pixels());
    const int a1 = sign * f.k[0], a2 = sign * f.k[1];
    const int b1 = sign * (f.tau[0] + f.k[0]), b2 = sign * (f.tau[1] + f.k[1]);
    for (int i1 = 0; i1 < g.p; ++i1) {
        const int ra = Grid::wrap(i1 - a1, g.p) * g.q;
        const int rb = Grid::wrap(i1 - b1, g.p) * g.q;
        for (int i2 = 0; i2 < g.q; ++i2) {
            sa[i1 * g.q + i2] = ra + Grid::wrap(i2 - a2, g.q);
            sb[i1 * g.q + i2] = rb + Grid::wrap(i2 - b2, g.q);
        }
    }
    for (int c = 0; c < img.bands(); ++c) {
        const double* in = img.data.col(c).data();
        double* dst = out.data.col(c).data();
        for (int i = 0; i < g.pixels(); ++i) dst[i] = in[sa[i]] - in[sb[i]];
    }
    return out;
}

}  // namespace

MultibandImage apply_difference(const DifferenceFilter& f, const MultibandImage& img) {
    return difference_core(f, img, +1);
}

MultibandImage apply_difference_adjoint(const DifferenceFilter& f, const MultibandImage& img) {
    return difference_core(f, img, -1);
}

void add_difference_adjoint(const DifferenceFilter& f, const MultibandImage& img,
                            MultibandImage& out) {
    if (out.grid != img.grid) throw std::invalid_argument("difference: grid mismatch");
    const Grid& g = img.grid;
    std::vector<int> sa(g.pixels()), sb(g.pixels());
    for (int i1 = 0; i1 < g.p; ++i1) {
        const int ra = Grid::wrap(i1 + f.k[0], g.p) * g.q;
        const int rb = Grid::wrap(i1 + f.tau[0] + f.k[0], g.p) * g.q;
        for (int i2 = 0; i2 < g.q; ++i2) {
            sa[i1 * g.q + i2] = ra + Grid::wrap(i2 + f.k[1], g.q);
            sb[i1 * g.q + i2] = rb + Grid::wrap(i2 + f.tau[1] + f.k[1], g.q);
        }
    }
    for (int c = 0; c < img.bands(); ++c) {
        const double* in = img.data.col(c).data();
        double* dst = out.data.col(c).data();
        for (int i = 0; i < g.pixels(); ++i) dst[i] += in[sa[i]] - in[sb[i]];
    }
}

}  // namespace nlpr
