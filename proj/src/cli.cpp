#include "nlpr/cli.hpp"

#include "nlpr/mbi_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace nlpr::cli {

namespace fs = std::filesystem;

const std::vector<Preset>& presets() {
    static const std::vector<Preset> table = {
        {"cave", 0.7, 1e-4, 1e-3, 0.15, 8},
        {"pavia", 0.8, 2e-4, 1e-3, 0.15, 20},
        {"chikusei", 1.0, 1e-3, 0.095, 0.25, 20},
        {"pleiades", 0.85, 9e-3, 1e-3, 0.17, 4},
    };
    return table;
}

const Preset* find_preset(const std::string& name) {
    for (const auto& p : presets())
        if (p.name == name) return &p;
    return nullptr;
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw UsageError("bad value for '" + key + "': " + v);
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        int i = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw UsageError("bad value for '" + key + "': " + v);
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw UsageError("bad value for '" + key + "': " + v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        std::uint64_t u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw UsageError("bad value for '" + key + "': " + v);
    }
}

}  // namespace

void RunConfig::apply(const std::map<std::string, std::string>& kv) {
    // Preset first so explicit keys in the same batch override its values.
    if (auto it = kv.find("preset"); it != kv.end()) {
        const Preset* pr = find_preset(it->second);
        if (!pr) throw UsageError("unknown preset '" + it->second + "'");
        preset = pr->name;
        solver.lambda1 = pr->lambda1;
        solver.lambda2 = pr->lambda2;
        solver.rho = pr->rho;
        solver.h = pr->h;
        solver.Ls = pr->Ls;
    }
    for (const auto& [k, v] : kv) {
        if (k == "preset") continue;
        if (k == "lambda1") solver.lambda1 = parse_double(k, v);
        else if (k == "lambda2") solver.lambda2 = parse_double(k, v);
        else if (k == "rho") solver.rho = parse_double(k, v);
        else if (k == "h") solver.h = parse_double(k, v);
        else if (k == "search_radius") solver.S = parse_int(k, v);
        else if (k == "patch_radius") solver.K = parse_int(k, v);
        else if (k == "subspace_dim") solver.Ls = parse_int(k, v);
        else if (k == "max_iters") solver.max_iters = parse_int(k, v);
        else if (k == "tol_primal") solver.tol_primal = parse_double(k, v);
        else if (k == "weight_mode") {
            if (v == "guided") solver.weight_mode = WeightMode::Guided;
            else if (v == "unit") solver.weight_mode = WeightMode::Unit;
            else throw UsageError("bad value for 'weight_mode': " + v);
        } else if (k == "structure_mode") {
            if (v == "patch") solver.structure_mode = StructureMode::Patch;
            else if (v == "pixel") solver.structure_mode = StructureMode::Pixel;
            else throw UsageError("bad value for 'structure_mode': " + v);
        } else if (k == "window_mode") {
            if (v == "nonlocal") solver.window_mode = WindowMode::Nonlocal;
            else if (v == "local") solver.window_mode = WindowMode::LocalAxis;
            else throw UsageError("bad value for 'window_mode': " + v);
        } else if (k == "penalty_mode") {
            if (v == "wl1") solver.penalty_mode = PenaltyKind::WeightedL1;
            else if (v == "wl2") solver.penalty_mode = PenaltyKind::WeightedL2;
            else if (v == "swl2") solver.penalty_mode = PenaltyKind::SquaredL2;
            else throw UsageError("bad value for 'penalty_mode': " + v);
        } else if (k == "include_zero_shift") solver.include_zero_shift = parse_bool(k, v);
        else if (k == "drop_tiny_weights") solver.drop_tiny_weights = parse_bool(k, v);
        else if (k == "init") {
            if (v == "zero") solver.init_mode = InitMode::Zero;
            else if (v == "upsample") solver.init_mode = InitMode::Upsample;
            else throw UsageError("bad value for 'init': " + v);
        } else if (k == "seed") solver.seed = parse_u64(k, v);
        else if (k == "deterministic") solver.deterministic = parse_bool(k, v);
        else if (k == "threads") solver.threads = parse_int(k, v);
        else if (k == "mem_budget_mb") solver.mem_budget_mb = parse_double(k, v);
        else if (k == "phantom") {
            if (v != "texture" && v != "mondrian" && v != "ramp")
                throw UsageError("bad value for 'phantom': " + v);
            phantom = v;
        } else if (k == "p") p = parse_int(k, v);
        else if (k == "q") q = parse_int(k, v);
        else if (k == "bands") bands = parse_int(k, v);
        else if (k == "ms_bands") ms_bands = parse_int(k, v);
        else if (k == "blur") {
            if (v != "starck" && v != "gaussian" && v != "identity")
                throw UsageError("bad value for 'blur': " + v);
            blur = v;
        } else if (k == "blur_sigma") blur_sigma = parse_double(k, v);
        else if (k == "blur_radius") blur_radius = parse_int(k, v);
        else if (k == "factor") factor = parse_int(k, v);
        else if (k == "snr_l") snr_l = parse_double(k, v);
        else if (k == "snr_h") snr_h = parse_double(k, v);
        else if (k == "out") out_dir = v;
        else if (k == "yl") yl_path = v;
        else if (k == "yh") yh_path = v;
        else if (k == "degradation") degradation_path = v;
        else if (k == "ref") ref_path = v;
        else if (k == "est") est_path = v;
        else if (k == "csv") csv_path = v;
        else if (k == "sizes") sizes = v;
        else if (k == "full") bench_full = parse_bool(k, v);
        else throw UsageError("unknown key '" + k + "'");
    }
}

BlurFilter RunConfig::make_blur() const {
    if (blur == "starck") return BlurFilter::starck_murtagh();
    if (blur == "gaussian") return BlurFilter::gaussian(blur_sigma, blur_radius);
    return BlurFilter::identity();
}

std::map<std::string, std::string> RunConfig::degradation_kv(const SpectralResponse& R) const {
    std::ostringstream sl, sh, bs;
    sl.precision(17);
    sh.precision(17);
    bs.precision(17);
    sl << snr_l;
    sh << snr_h;
    bs << blur_sigma;
    return {
        {"p", std::to_string(p)},
        {"q", std::to_string(q)},
        {"bands", std::to_string(bands)},
        {"ms_bands", std::to_string(ms_bands)},
        {"factor", std::to_string(factor)},
        {"blur", blur},
        {"blur_sigma", bs.str()},
        {"blur_radius", std::to_string(blur_radius)},
        {"snr_l", sl.str()},
        {"snr_h", sh.str()},
        {"seed", std::to_string(solver.seed)},
        {"spectral_response", matrix_to_string(R.R)},
    };
}

namespace {

PhantomKind phantom_kind(const std::string& name) {
    if (name == "texture") return PhantomKind::Texture;
    if (name == "mondrian") return PhantomKind::Mondrian;
    return PhantomKind::Ramp;
}

struct LoadedInstance {
    MultibandImage yl_img;  // low grid
    MultibandImage yh_img;  // full grid
    RunConfig degr;         // fields refreshed from the degradation file
    SpectralResponse R;
};

LoadedInstance load_instance(const RunConfig& rc) {
    if (rc.yl_path.empty() || rc.yh_path.empty() || rc.degradation_path.empty())
        throw UsageError("fuse needs --yl, --yh and --degradation");
    LoadedInstance li;
    li.yl_img = read_mbi(rc.yl_path);
    li.yh_img = read_mbi(rc.yh_path);
    auto kv = read_kv_file(rc.degradation_path);
    auto rit = kv.find("spectral_response");
    if (rit == kv.end()) throw std::runtime_error("degradation file lacks spectral_response");
    li.R = SpectralResponse(matrix_from_string(rit->second));
    kv.erase("spectral_response");
    li.degr = rc;
    li.degr.apply(kv);
    return li;
}

void write_fusion_outputs(const RunConfig& rc, const MultibandImage& zhat,
                          const IterationLog& log) {
    fs::create_directories(rc.out_dir);
    write_mbi(fs::path(rc.out_dir) / "zhat.mbi", zhat);
    std::ofstream csv(fs::path(rc.out_dir) / "log.csv");
    if (!csv) throw std::runtime_error("io: cannot write log.csv");
    log.write_csv(csv, rc.solver.deterministic);
    for (int c = 0; c < zhat.bands(); ++c) {
        std::ostringstream name;
        name << "zhat_band" << std::setfill('0') << std::setw(2) << c << ".pgm";
        write_pgm(fs::path(rc.out_dir) / name.str(), zhat, c);
    }
}

}  // namespace

int run_simulate(const RunConfig& rc) {
    MultibandImage Z = make_phantom(phantom_kind(rc.phantom), rc.p, rc.q, rc.bands,
                                    rc.solver.seed);
    SpectralResponse R = make_spectral_response(rc.bands, rc.ms_bands);
    DegradationSpec spec{rc.make_blur(), rc.factor, R, rc.snr_l, rc.snr_h, rc.solver.seed};
    auto [Yl, Yh] = degrade(Z, spec);

    fs::create_directories(rc.out_dir);
    write_mbi(fs::path(rc.out_dir) / "gt.mbi", Z);
    write_mbi(fs::path(rc.out_dir) / "yl.mbi",
              MultibandImage(Grid(rc.p / rc.factor, rc.q / rc.factor), Yl));
    write_mbi(fs::path(rc.out_dir) / "yh.mbi", MultibandImage(Z.grid, Yh));
    write_kv_file(fs::path(rc.out_dir) / "spec.cfg", rc.degradation_kv(R));
    std::cout << "simulate: wrote gt.mbi yl.mbi yh.mbi spec.cfg to " << rc.out_dir << "\n";
    return 0;
}

int run_fuse(const RunConfig& rc) {
    LoadedInstance li = load_instance(rc);
    const RunConfig& d = li.degr;
    Grid full(d.p, d.q);
    if (li.yh_img.grid != full) throw std::runtime_error("fuse: yh grid mismatch");
    if (li.yl_img.grid != Grid(d.p / d.factor, d.q / d.factor))
        throw std::runtime_error("fuse: yl grid inconsistent with decimation factor");
    if (li.R.R.rows() != li.yl_img.bands() || li.R.R.cols() != li.yh_img.bands())
        throw std::runtime_error("fuse: spectral response shape mismatch");

    FusionOperators ops;
    ops.B = d.make_blur();
    ops.S = SamplingMask::decimation(full, d.factor);
    ops.R = li.R;
    ops.E = build_subspace(li.yl_img.data, rc.solver.Ls);

    NlprWeights weights = make_weights(li.yh_img, rc.solver);
    AdmmSolver solver(li.yl_img.data, li.yh_img.data, ops, weights, rc.solver);
    SolveResult res = solver.solve();

    write_fusion_outputs(rc, MultibandImage(full, res.Z), res.log);
    std::cout << "fuse: " << res.iterations << " iterations, "
              << (res.converged ? "converged" : "max_iters reached")
              << ", objective " << res.log.rows.back().objective << "\n";
    return 0;
}

int run_metrics(const RunConfig& rc) {
    if (rc.ref_path.empty() || rc.est_path.empty())
        throw UsageError("metrics needs --ref and --est");
    MultibandImage ref = read_mbi(rc.ref_path);
    MultibandImage est = read_mbi(rc.est_path);
    MetricReport rep = evaluate(ref, est, rc.factor);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << rep.pretty();
    std::cout << MetricReport::csv_header() << "\n" << rep.csv_row() << "\n";
    if (!rc.csv_path.empty()) {
        std::ofstream os(rc.csv_path);
        if (!os) throw std::runtime_error("io: cannot write " + rc.csv_path);
        os << MetricReport::csv_header() << "\n" << rep.csv_row() << "\n";
    }
    return 0;
}

int run_bench(const RunConfig& rc) {
    std::vector<int> ladder;
    std::istringstream ss(rc.sizes);
    std::string tok;
    while (std::getline(ss, tok, ',')) ladder.push_back(parse_int("sizes", tok));
    if (std::find(ladder.begin(), ladder.end(), 8) == ladder.end())
        ladder.insert(ladder.begin(), 8);
    std::sort(ladder.begin(), ladder.end());

    struct Row {
        int size, n_h, Ls;
        double fast_ms, dense_ms, ratio;
    };
    std::vector<Row> rows;
    auto bench_point = [&](int n, int Ls) {
        Grid g(n, n);
        auto window = window_shifts(1);
        auto filters = build_difference_filters(std::span<const Shift>(window), 1);
        FrequencyPlan pl = plan(g, BlurFilter::starck_murtagh(), filters);
        std::mt19937_64 rng(rc.solver.seed + n);
        std::normal_distribution<double> gauss(0.0, 1.0);
        MultibandImage C(g, Ls);
        for (int c = 0; c < Ls; ++c)
            for (int i = 0; i < g.pixels(); ++i) C.data(i, c) = gauss(rng);

        using clock = std::chrono::steady_clock;
        // Warm the FFT plan cache, then take the median of five runs.
        solve_x_system(pl, C);
        std::vector<double> fast;
        for (int rep = 0; rep < 5; ++rep) {
            auto t0 = clock::now();
            solve_x_system(pl, C);
            fast.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
        }
        std::nth_element(fast.begin(), fast.begin() + 2, fast.end());
        const double fast_ms = fast[2];

        auto t0 = clock::now();
        solve_x_cg(BlurFilter::starck_murtagh(), filters, window, 1, C, 1e-8, 500,
                   CgRoute::PatchGram);
        const double dense_ms =
            std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        rows.push_back({n, g.pixels(), Ls, fast_ms, dense_ms, dense_ms / fast_ms});
    };
    for (int n : ladder) bench_point(n, 8);
    if (rc.bench_full) bench_point(200, 20);

    std::ostringstream csv;
    csv << "size,n_h,L_s,fast_ms,dense_ms,ratio\n";
    csv.precision(6);
    for (const auto& r : rows)
        csv << r.size << "x" << r.size << ',' << r.n_h << ',' << r.Ls << ',' << std::fixed
            << r.fast_ms << ',' << r.dense_ms << ',' << r.ratio << '\n';
    std::cout << csv.str();
    if (!rc.csv_path.empty()) {
        std::ofstream os(rc.csv_path);
        if (!os) throw std::runtime_error("io: cannot write " + rc.csv_path);
        os << csv.str();
    }
    return 0;
}

int run_ablate(const RunConfig& rc) {
    MultibandImage Z = make_phantom(phantom_kind(rc.phantom), rc.p, rc.q, rc.bands,
                                    rc.solver.seed);
    SpectralResponse R = make_spectral_response(rc.bands, rc.ms_bands);
    DegradationSpec spec{rc.make_blur(), rc.factor, R, rc.snr_l, rc.snr_h, rc.solver.seed};
    auto [Yl, Yh] = degrade(Z, spec);
    Grid full(rc.p, rc.q);

    FusionOperators ops;
    ops.B = spec.blur;
    ops.S = SamplingMask::decimation(full, rc.factor);
    ops.R = R;
    ops.E = build_subspace(Yl, rc.solver.Ls);
    MultibandImage guide(full, Yh);

    struct Case {
        const char* name;
        WeightMode wm;
        StructureMode sm;
        WindowMode wn;
    };
    const Case cases[] = {
        {"C1", WeightMode::Guided, StructureMode::Patch, WindowMode::Nonlocal},
        {"C2", WeightMode::Unit, StructureMode::Patch, WindowMode::Nonlocal},
        {"C3", WeightMode::Guided, StructureMode::Pixel, WindowMode::Nonlocal},
        {"C4", WeightMode::Unit, StructureMode::Pixel, WindowMode::Nonlocal},
        {"C5", WeightMode::Unit, StructureMode::Pixel, WindowMode::LocalAxis},
    };

    std::ostringstream csv;
    csv << "case," << MetricReport::csv_header() << "\n";
    for (const auto& c : cases) {
        SolverConfig sc = rc.solver;
        sc.weight_mode = c.wm;
        sc.structure_mode = c.sm;
        sc.window_mode = c.wn;
        NlprWeights w = make_weights(guide, sc);
        SolveResult res = solve(Yl, guide.data, ops, w, sc);
        MetricReport rep = evaluate(Z, MultibandImage(full, res.Z), rc.factor);
        csv << c.name << ',' << rep.csv_row() << "\n";
    }
    std::cout << csv.str();
    fs::create_directories(rc.out_dir);
    std::ofstream os(fs::path(rc.out_dir) / "ablate.csv");
    if (!os) throw std::runtime_error("io: cannot write ablate.csv");
    os << csv.str();
    return 0;
}

}  // namespace nlpr::cli
