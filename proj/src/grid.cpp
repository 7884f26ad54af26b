#include "nlpr/grid.hpp"

namespace nlpr {

MultibandImage shift(const MultibandImage& img, Shift tau) {
    const Grid& g = img.grid;
    MultibandImage out(g, img.bands());
    // Precompute wrapped source rows once, then gather per band.
    std::vector<int> src(g.pixels());
    for (int i1 = 0; i1 < g.p; ++i1) {
        const int s1 = Grid::wrap(i1 - tau[0], g.p);
        for (int i2 = 0; i2 < g.q; ++i2) {
            src[i1 * g.q + i2] = s1 * g.q + Grid::wrap(i2 - tau[1], g.q);
        }
    }
    for (int c = 0; c < img.bands(); ++c) {
        const double* in = img.data.col(c).data();
        double* dst = out.data.col(c).data();
        for (int i = 0; i < g.pixels(); ++i) dst[i] = in[src[i]];
    }
    return out;
}

std::vector<Shift> PatchSpec::offset_list() const {
    std::vector<Shift> ks;
    ks.reserve(offsets());
    for (int k1 = -K; k1 <= K; ++k1)
        for (int k2 = -K; k2 <= K; ++k2) ks.push_back({k1, k2});
    return ks;
}

Eigen::VectorXd extract_patch(const MultibandImage& img, Pixel i, const PatchSpec& spec) {
    Eigen::VectorXd v(spec.length(img.bands()));
    int pos = 0;
    for (int c = 0; c < img.bands(); ++c)
        for (int k1 = -spec.K; k1 <= spec.K; ++k1)
            for (int k2 = -spec.K; k2 <= spec.K; ++k2)
                v[pos++] = img.data(img.grid.index(i[0] - k1, i[1] - k2), c);
    return v;
}

Eigen::VectorXd patch_difference(const MultibandImage& img, Pixel i, Shift tau,
                                 const PatchSpec& spec) {
    Pixel j = {i[0] - tau[0], i[1] - tau[1]};
    return extract_patch(img, i, spec) - extract_patch(img, j, spec);
}

}  // namespace nlpr
