#include "nlpr/frequency.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace nlpr {

namespace {

// FFTW plan cache. Planning is not thread-safe, execution on distinct
// buffers is; plans are created with FFTW_UNALIGNED so the new-array execute
// interface accepts any buffer. FFTW_ESTIMATE keeps planning deterministic.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }

    struct Entry {
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
    };

    Entry get(const Grid& g) {
        std::scoped_lock lock(mu_);
        auto key = std::pair{g.p, g.q};
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> buf(static_cast<size_t>(g.pixels()));
        auto* b = reinterpret_cast<fftw_complex*>(buf.data());
        Entry e;
        e.fwd = fftw_plan_dft_2d(g.p, g.q, b, b, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        e.bwd = fftw_plan_dft_2d(g.p, g.q, b, b, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!e.fwd || !e.bwd) throw std::runtime_error("fft: planner failed");
        plans_.emplace(key, e);
        return e;
    }

private:
    PlanCache() = default;
    std::mutex mu_;
    std::map<std::pair<int, int>, Entry> plans_;
};

void execute(fftw_plan p, Eigen::VectorXcd& inout) {
    auto* b = reinterpret_cast<fftw_complex*>(inout.data());
    fftw_execute_dft(p, b, b);
}

}  // namespace

Eigen::VectorXcd fft2(const Grid& g, const Eigen::VectorXcd& band) {
    if (band.size() != g.pixels()) throw std::invalid_argument("fft: size mismatch");
    Eigen::VectorXcd out = band;
    execute(PlanCache::instance().get(g).fwd, out);
    return out;
}

Eigen::VectorXcd fft2(const Grid& g, const Eigen::VectorXd& band) {
    return fft2(g, Eigen::VectorXcd(band.cast<std::complex<double>>()));
}

Eigen::VectorXcd ifft2(const Grid& g, const Eigen::VectorXcd& spectrum) {
    if (spectrum.size() != g.pixels()) throw std::invalid_argument("fft: size mismatch");
    Eigen::VectorXcd out = spectrum;
    execute(PlanCache::instance().get(g).bwd, out);
    out /= static_cast<double>(g.pixels());
    return out;
}

Eigen::VectorXd ifft2_real(const Grid& g, const Eigen::VectorXcd& spectrum, double imag_tol) {
    Eigen::VectorXcd z = ifft2(g, spectrum);
    const double scale = std::max(1.0, z.real().cwiseAbs().maxCoeff());
    const double residue = z.imag().cwiseAbs().maxCoeff();
    if (residue > imag_tol * scale)
        throw std::runtime_error("fft: inverse transform has non-real residue");
    return z.real();
}

Eigen::VectorXcd filter_spectrum(const Grid& g, const BlurFilter& B) {
    Eigen::VectorXd taps = Eigen::VectorXd::Zero(g.pixels());
    for (const auto& t : B.taps) taps[g.index(t.offset[0], t.offset[1])] += t.value;
    return fft2(g, taps);
}

Eigen::VectorXcd filter_spectrum(const Grid& g, const DifferenceFilter& f) {
    Eigen::VectorXd taps = Eigen::VectorXd::Zero(g.pixels());
    taps[g.index(f.k[0], f.k[1])] += 1.0;
    taps[g.index(f.tau[0] + f.k[0], f.tau[1] + f.k[1])] -= 1.0;
    return fft2(g, taps);
}

FrequencyPlan plan(const Grid& g, const BlurFilter& B,
                   std::span<const DifferenceFilter> filters) {
    FrequencyPlan pl;
    pl.grid = g;
    pl.b_hat = filter_spectrum(g, B);
    pl.d0_power = Eigen::VectorXd::Zero(g.pixels());

    // One representative spectrum per tau group; every k of a tau has the
    // same magnitude spectrum (shift identity), so scale by the group size.
    std::size_t i = 0;
    int per_tau = -1;
    while (i < filters.size()) {
        std::size_t j = i;
        while (j < filters.size() && filters[j].tau == filters[i].tau) ++j;
        const int n_k = static_cast<int>(j - i);
        if (per_tau < 0) per_tau = n_k;
        if (n_k != per_tau)
            throw std::invalid_argument("plan: filters must carry the same k set per tau");
        pl.d0_power += filter_spectrum(g, filters[i]).cwiseAbs2();
        i = j;
    }
    const double P = per_tau < 0 ? 0.0 : static_cast<double>(per_tau);
    pl.denom = 1.0 + pl.b_hat.cwiseAbs2().array() + P * pl.d0_power.array();
    if ((pl.denom.array() < 1.0 - 1e-12).any())
        throw std::runtime_error("plan: denominator fell below 1");
    pl.inv_denom = pl.denom.cwiseInverse();
    return pl;
}

MultibandImage solve_x_system(const FrequencyPlan& plan, const MultibandImage& C) {
    if (C.grid != plan.grid) throw std::invalid_argument("solve_x: grid mismatch");
    MultibandImage X(C.grid, C.bands());
    for (int c = 0; c < C.bands(); ++c) {
        Eigen::VectorXcd spec = fft2(plan.grid, Eigen::VectorXd(C.data.col(c)));
        spec.array() *= plan.inv_denom.array();
        X.data.col(c) = ifft2_real(plan.grid, spec);
    }
    return X;
}

}  // namespace nlpr
