#include "nlpr/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace nlpr {

namespace {

constexpr double kPi = std::numbers::pi;

// Distinct, reproducible engines per (seed, stream).
std::mt19937_64 engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{seed, stream, std::uint64_t{0x9e3779b97f4a7c15ull}};
    return std::mt19937_64(seq);
}

// Smooth spectral signature in [0,1]: a raised cosine bump over the bands.
Eigen::VectorXd spectral_signature(int bands, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double center = unif(rng) * (bands - 1);
    const double width = 0.25 * bands + unif(rng) * 0.75 * bands;
    const double floor_v = 0.05 + 0.3 * unif(rng);
    Eigen::VectorXd s(bands);
    for (int c = 0; c < bands; ++c) {
        const double t = std::min(std::abs(c - center) / width, 1.0);
        s[c] = floor_v + (1.0 - floor_v) * 0.5 * (1.0 + std::cos(kPi * t));
    }
    return s;
}

}  // namespace

MultibandImage make_phantom(PhantomKind kind, int p, int q, int bands, std::uint64_t seed) {
    if (p < 8 || q < 8) throw std::invalid_argument("phantom: dimensions must be >= 8");
    if (bands < 1) throw std::invalid_argument("phantom: bands must be >= 1");
    Grid g(p, q);
    auto rng = engine(seed, 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    if (kind == PhantomKind::Ramp) {
        // Affine bands: rank <= 3 by construction (1, x, y).
        MultibandImage img(g, bands);
        for (int c = 0; c < bands; ++c) {
            double a = 0.2 + 0.6 * unif(rng);
            double bx = (unif(rng) - 0.5) * 0.6;
            double by = (unif(rng) - 0.5) * 0.6;
            for (int i1 = 0; i1 < p; ++i1)
                for (int i2 = 0; i2 < q; ++i2) {
                    double v = a + bx * (static_cast<double>(i1) / p - 0.5) +
                               by * (static_cast<double>(i2) / q - 0.5);
                    img.data(i1 * q + i2, c) = std::clamp(v, 0.0, 1.0);
                }
        }
        return img;
    }

    // Abundance maps in [0,1] mixed with smooth spectra; image stays in
    // [0,1] and has rank <= min(bands, components). Texture always carries
    // at least one grating besides the base.
    const int components =
        std::min(kind == PhantomKind::Texture ? std::max(bands, 2) : bands, 5);
    Eigen::MatrixXd abundance(g.pixels(), components);
    if (kind == PhantomKind::Texture) {
        // Regions of repetitive oriented gratings, each a few pixels in
        // period: within a region, shifts along the stripes see nearly
        // equal intensities while shifts across them do not. Component 0 is a
        // smooth base; the rest are gratings masked to a rectangle
        // partition of the grid (zero abundance outside their rectangle).
        // Integer cycle counts keep each grating periodic across the wrap.
        abundance.setZero();
        abundance.col(0).setConstant(0.5);

        struct Rect {
            int r0, c0, rows, cols;
        };
        std::vector<Rect> rects{{0, 0, p, q}};
        while (static_cast<int>(rects.size()) < components - 1) {
            // Split the largest rectangle somewhere in its middle.
            std::size_t widest = 0;
            for (std::size_t i = 1; i < rects.size(); ++i)
                if (rects[i].rows * rects[i].cols > rects[widest].rows * rects[widest].cols)
                    widest = i;
            Rect r = rects[widest];
            const double cut = 0.4 + 0.2 * unif(rng);
            rects.erase(rects.begin() + static_cast<std::ptrdiff_t>(widest));
            if (r.rows >= r.cols) {
                int split = std::max(1, static_cast<int>(r.rows * cut));
                rects.push_back({r.r0, r.c0, split, r.cols});
                rects.push_back({r.r0 + split, r.c0, r.rows - split, r.cols});
            } else {
                int split = std::max(1, static_cast<int>(r.cols * cut));
                rects.push_back({r.r0, r.c0, r.rows, split});
                rects.push_back({r.r0, r.c0 + split, r.rows, r.cols - split});
            }
        }
        for (int r = 1; r < components; ++r) {
            const Rect& rect = rects[r - 1];
            const double period1 = 4.0 + 6.0 * unif(rng);
            const double period2 = 4.0 + 6.0 * unif(rng);
            const int orient = static_cast<int>(unif(rng) * 3.0);  // rows, columns, diagonal
            const double f1 = orient == 1 ? 0.0 : std::max(1.0, std::round(p / period1));
            const double f2 = orient == 0 ? 0.0 : std::max(1.0, std::round(q / period2));
            const double cross = orient == 2 && unif(rng) < 0.5 ? -1.0 : 1.0;
            const double phase = 2.0 * kPi * unif(rng);
            for (int i1 = rect.r0; i1 < rect.r0 + rect.rows; ++i1)
                for (int i2 = rect.c0; i2 < rect.c0 + rect.cols; ++i2) {
                    const double x = static_cast<double>(i1) / p;
                    const double y = static_cast<double>(i2) / q;
                    double v = std::sin(2.0 * kPi * (f1 * x + cross * f2 * y) + phase);
                    abundance(i1 * q + i2, r) = 0.5 * (1.0 + v);
                }
        }
    } else {  // Mondrian: overlapping constant rectangles on a flat canvas.
        abundance.setZero();
        abundance.col(0).setConstant(1.0);
        std::uniform_int_distribution<int> rp(0, p - 1), rq(0, q - 1);
        for (int r = 1; r < components; ++r) {
            for (int box = 0; box < 3; ++box) {
                int r0 = rp(rng), c0 = rq(rng);
                int rh = 2 + rp(rng) % std::max(2, p / 3);
                int cw = 2 + rq(rng) % std::max(2, q / 3);
                double level = 0.3 + 0.7 * unif(rng);
                for (int i1 = r0; i1 < std::min(p, r0 + rh); ++i1)
                    for (int i2 = c0; i2 < std::min(q, c0 + cw); ++i2)
                        abundance(i1 * q + i2, r) = level;
            }
        }
    }

    Eigen::MatrixXd spectra(components, bands);
    for (int r = 0; r < components; ++r) spectra.row(r) = spectral_signature(bands, rng);
    MultibandImage img(g, bands);
    img.data = abundance * spectra / components;
    return img;
}

SpectralResponse make_spectral_response(int L_l, int L_h) {
    if (L_h < 1 || L_h > L_l) throw std::invalid_argument("response: need 1 <= L_h <= L_l");
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(L_l, L_h);
    const double width = static_cast<double>(L_l) / L_h;
    for (int j = 0; j < L_h; ++j) {
        const double center = (j + 0.5) * width - 0.5;
        for (int i = 0; i < L_l; ++i) {
            const double t = std::abs(i - center) / width;
            R(i, j) = std::max(0.0, 1.0 - t);  // triangular profile
        }
        const double s = R.col(j).sum();
        if (s <= 0) R(std::min<int>(L_l - 1, static_cast<int>(center + 0.5)), j) = 1.0;
        R.col(j) /= R.col(j).sum();
    }
    return SpectralResponse(R);
}

namespace {

// White Gaussian noise scaled so the empirical SNR target holds in
// expectation: sigma^2 = ||clean||^2 / (count * 10^(snr/10)).
void add_noise(Eigen::MatrixXd& block, double snr_db, std::mt19937_64& rng) {
    if (std::isinf(snr_db)) return;
    const double power = block.squaredNorm() / block.size();
    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Eigen::Index j = 0; j < block.cols(); ++j)
        for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) += gauss(rng);
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> degrade(const MultibandImage& Z,
                                                    const DegradationSpec& spec) {
    if (spec.R.R.rows() != Z.bands())
        throw std::invalid_argument("degrade: R rows must equal the band count");
    SamplingMask S = SamplingMask::decimation(Z.grid, spec.factor);
    Eigen::MatrixXd Yl = downsample(S, apply_blur(spec.blur, Z));
    Eigen::MatrixXd Yh = Z.data * spec.R.R;
    auto rng_l = engine(spec.seed, 2);
    auto rng_h = engine(spec.seed, 3);
    add_noise(Yl, spec.snr_l_db, rng_l);
    add_noise(Yh, spec.snr_h_db, rng_h);
    return {std::move(Yl), std::move(Yh)};
}

MultibandImage grayscale(const MultibandImage& img) {
    MultibandImage out(img.grid, 1);
    out.data.col(0) = img.data.rowwise().mean();
    return out;
}

InpaintingInstance make_inpainting_instance(const MultibandImage& Z, double kept_fraction,
                                            std::uint64_t seed) {
    if (!(kept_fraction > 0.0 && kept_fraction <= 1.0))
        throw std::invalid_argument("inpainting: kept fraction must be in (0, 1]");
    const int n = Z.pixels();
    const int keep = static_cast<int>(std::lround(kept_fraction * n));
    if (keep < 1) throw std::invalid_argument("inpainting: mask would be empty");

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    auto rng = engine(seed, 4);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::uint8_t> mask(n, 0);
    for (int i = 0; i < keep; ++i) mask[order[i]] = 1;

    InpaintingInstance inst;
    inst.ops.B = BlurFilter::identity();
    inst.ops.S = SamplingMask::from_mask(Z.grid, std::move(mask));
    inst.ops.R = SpectralResponse::identity(Z.bands());
    inst.ops.E = SubspaceBasis::identity(Z.bands());
    inst.Yl = downsample(inst.ops.S, Z);
    return inst;
}

}  // namespace nlpr
