#pragma once

#include "nlpr/metrics.hpp"
#include "nlpr/simkit.hpp"
#include "nlpr/solver.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlpr::cli {

/// Bad flags, bad config keys or values (exit code 1 in the tool).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shipped parameter presets (lambda1, lambda2, rho, h, L_s).
struct Preset {
    std::string name;
    double lambda1, lambda2, rho, h;
    int Ls;
};
const std::vector<Preset>& presets();
const Preset* find_preset(const std::string& name);

/// Everything a command needs: solver settings plus phantom, degradation,
/// and path options. Accepts flat key=value maps (config files and flags go
/// through the same parser); unknown keys are errors.
struct RunConfig {
    SolverConfig solver;
    std::string preset;

    // phantom / degradation (simulate, ablate, bench)
    std::string phantom = "texture";
    int p = 64, q = 64;
    int bands = 6;
    int ms_bands = 3;
    std::string blur = "starck";  // starck | gaussian | identity
    double blur_sigma = 1.0;
    int blur_radius = 2;
    int factor = 4;
    double snr_l = 25.0, snr_h = 25.0;  // dB, "inf" disables noise

    // paths
    std::string out_dir = ".";
    std::string yl_path, yh_path, degradation_path;
    std::string ref_path, est_path;
    std::string csv_path;

    // bench
    std::string sizes = "8,16,32,64";
    bool bench_full = false;

    void apply(const std::map<std::string, std::string>& kv);
    BlurFilter make_blur() const;

    /// Degradation description written by simulate and consumed by fuse.
    std::map<std::string, std::string> degradation_kv(const SpectralResponse& R) const;
};

int run_simulate(const RunConfig& rc);
int run_fuse(const RunConfig& rc);
int run_metrics(const RunConfig& rc);
int run_bench(const RunConfig& rc);
int run_ablate(const RunConfig& rc);

}  // namespace nlpr::cli
