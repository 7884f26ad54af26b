// mbfuse: simulate degraded multiband observations, fuse them back with the
// guided nonlocal patch regularizer, score the result, and benchmark the
// fast X-update. Exit codes: 0 ok, 1 usage, 2 runtime.

#include "nlpr/cli.hpp"
#include "nlpr/mbi_io.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>
#include <string>

namespace {

using nlpr::cli::RunConfig;

// Every option lands in a key=value batch so config files and flags share
// one parser; flags are applied after the config file and win.
struct KvCollector {
    std::map<std::string, std::string> kv;
    std::string config_path;

    void add(CLI::App* cmd, const std::string& key, const std::string& help) {
        cmd->add_option_function<std::string>(
            "--" + key, [this, key](const std::string& v) { kv[key] = v; }, help);
    }

    void add_config(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key=value config file");
    }

    RunConfig build() const {
        RunConfig rc;
        if (!config_path.empty()) rc.apply(nlpr::read_kv_file(config_path));
        rc.apply(kv);
        return rc;
    }
};

void add_solver_keys(CLI::App* cmd, KvCollector& c) {
    c.add(cmd, "preset", "parameter preset: cave, pavia, chikusei, pleiades");
    c.add(cmd, "lambda1", "weight of the high-resolution data term");
    c.add(cmd, "lambda2", "regularization weight");
    c.add(cmd, "rho", "ADMM penalty parameter");
    c.add(cmd, "h", "weight smoothing parameter");
    c.add(cmd, "search_radius", "search window radius S");
    c.add(cmd, "patch_radius", "patch radius K");
    c.add(cmd, "subspace_dim", "subspace dimension L_s");
    c.add(cmd, "max_iters", "iteration cap");
    c.add(cmd, "tol_primal", "relative primal residual tolerance");
    c.add(cmd, "weight_mode", "guided | unit");
    c.add(cmd, "structure_mode", "patch | pixel");
    c.add(cmd, "window_mode", "nonlocal | local");
    c.add(cmd, "penalty_mode", "wl1 | wl2 | swl2");
    c.add(cmd, "include_zero_shift", "keep the zero shift in the window (0/1)");
    c.add(cmd, "drop_tiny_weights", "zero weights below 1e-12 (0/1)");
    c.add(cmd, "init", "zero | upsample");
    c.add(cmd, "seed", "RNG seed");
    c.add(cmd, "deterministic", "byte-reproducible outputs (0/1)");
    c.add(cmd, "threads", "internal parallelism cap");
    c.add(cmd, "mem_budget_mb", "refuse to allocate beyond this estimate");
}

void add_instance_keys(CLI::App* cmd, KvCollector& c) {
    c.add(cmd, "phantom", "texture | mondrian | ramp");
    c.add(cmd, "p", "grid rows");
    c.add(cmd, "q", "grid columns");
    c.add(cmd, "bands", "spectral band count L_l");
    c.add(cmd, "ms_bands", "guide band count L_h");
    c.add(cmd, "blur", "starck | gaussian | identity");
    c.add(cmd, "blur_sigma", "gaussian blur sigma");
    c.add(cmd, "blur_radius", "gaussian blur radius");
    c.add(cmd, "factor", "decimation factor d");
    c.add(cmd, "snr_l", "SNR of the low-res observation (dB, inf = none)");
    c.add(cmd, "snr_h", "SNR of the guide observation (dB, inf = none)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiband image fusion with guided nonlocal patch regularization"};
    // --h is the weight smoothing parameter, so help keeps only its long form.
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);

    struct Cmd {
        KvCollector kv;
        std::function<int(const RunConfig&)> run;
    };
    std::map<std::string, Cmd> cmds;

    auto add_cmd = [&](const std::string& name, const std::string& help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->set_help_flag("--help", "print help");
        return cmd;
    };

    auto* sim = add_cmd("simulate", "degrade a phantom into (Y_l, Y_h)");
    cmds["simulate"].run = nlpr::cli::run_simulate;
    add_instance_keys(sim, cmds["simulate"].kv);
    add_solver_keys(sim, cmds["simulate"].kv);
    cmds["simulate"].kv.add(sim, "out", "output directory");
    cmds["simulate"].kv.add_config(sim);

    auto* fuse = add_cmd("fuse", "run the ADMM fusion solver");
    cmds["fuse"].run = nlpr::cli::run_fuse;
    add_solver_keys(fuse, cmds["fuse"].kv);
    cmds["fuse"].kv.add(fuse, "yl", "low-res observation (.mbi)");
    cmds["fuse"].kv.add(fuse, "yh", "high-res guide observation (.mbi)");
    cmds["fuse"].kv.add(fuse, "degradation", "spec.cfg written by simulate");
    cmds["fuse"].kv.add(fuse, "out", "output directory");
    cmds["fuse"].kv.add_config(fuse);

    auto* met = add_cmd("metrics", "score a reconstruction against a reference");
    cmds["metrics"].run = nlpr::cli::run_metrics;
    cmds["metrics"].kv.add(met, "ref", "reference image (.mbi)");
    cmds["metrics"].kv.add(met, "est", "estimate image (.mbi)");
    cmds["metrics"].kv.add(met, "factor", "resolution ratio d for ERGAS");
    cmds["metrics"].kv.add(met, "csv", "also write the report to this CSV file");
    cmds["metrics"].kv.add_config(met);

    auto* ben = add_cmd("bench", "fast vs naive X-update timings");
    cmds["bench"].run = nlpr::cli::run_bench;
    cmds["bench"].kv.add(ben, "sizes", "comma-separated grid sizes (8 always included)");
    cmds["bench"].kv.add(ben, "full", "also time the 200x200x20 point (0/1)");
    cmds["bench"].kv.add(ben, "seed", "RNG seed");
    cmds["bench"].kv.add(ben, "csv", "write the timing table to this CSV file");
    cmds["bench"].kv.add_config(ben);

    auto* abl = add_cmd("ablate", "run the C1..C5 regularizer cases");
    cmds["ablate"].run = nlpr::cli::run_ablate;
    add_instance_keys(abl, cmds["ablate"].kv);
    add_solver_keys(abl, cmds["ablate"].kv);
    cmds["ablate"].kv.add(abl, "out", "output directory");
    cmds["ablate"].kv.add_config(abl);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        const Cmd& cmd = cmds.at(name);
        return cmd.run(cmd.kv.build());
    } catch (const nlpr::cli::UsageError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return 2;
    }
}
