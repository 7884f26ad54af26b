#include "nlpr/cli.hpp"
#include "nlpr/mbi_io.hpp"

#include "nlpr/simkit.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace nlpr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("nlpr_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("mbi round trip is bit-exact") {
    TempDir tmp;
    MultibandImage img = oracles::random_image(Grid(9, 7), 4, 71);
    img.data(5, 2) = -1e-300;  // denormal survives
    img.data(6, 3) = 1e300;
    fs::path f = tmp.path / "x.mbi";
    write_mbi(f, img);
    MultibandImage back = read_mbi(f);
    CHECK(back.grid == img.grid);
    REQUIRE(back.data.rows() == img.data.rows());
    CHECK(std::memcmp(back.data.data(), img.data.data(),
                      sizeof(double) * img.data.size()) == 0);

    CHECK_THROWS_AS(read_mbi(tmp.path / "missing.mbi"), std::runtime_error);
}

TEST_CASE("pgm preview has the right geometry and scaling comment") {
    TempDir tmp;
    MultibandImage img = oracles::random_image(Grid(6, 8), 2, 72);
    fs::path f = tmp.path / "b0.pgm";
    write_pgm(f, img, 0);
    std::string bytes = slurp(f);
    CHECK(bytes.substr(0, 2) == "P5");
    CHECK(bytes.find("# min ") != std::string::npos);
    CHECK(bytes.find("8 6") != std::string::npos);  // width height
    CHECK_THROWS_AS(write_pgm(f, img, 5), std::invalid_argument);
}

TEST_CASE("key=value files: parsing, comments, and error cases") {
    TempDir tmp;
    fs::path f = tmp.path / "c.cfg";
    {
        std::ofstream os(f);
        os << "# comment line\n"
           << "lambda1 = 0.5\n"
           << "  blur = starck  # trailing comment\n"
           << "\n"
           << "seed=9\n";
    }
    auto kv = read_kv_file(f);
    CHECK(kv.size() == 3);
    CHECK(kv.at("lambda1") == "0.5");
    CHECK(kv.at("blur") == "starck");
    CHECK(kv.at("seed") == "9");

    {
        std::ofstream os(f);
        os << "lambda1 0.5\n";  // missing '='
    }
    CHECK_THROWS_AS(read_kv_file(f), std::runtime_error);

    {
        std::ofstream os(f);
        os << "a = 1\na = 2\n";
    }
    CHECK_THROWS_AS(read_kv_file(f), std::runtime_error);
}

TEST_CASE("matrix text form round trips") {
    Eigen::MatrixXd m = oracles::random_matrix(3, 4, 73);
    Eigen::MatrixXd back = matrix_from_string(matrix_to_string(m));
    CHECK((m - back).norm() == 0.0);  // %.17g reproduces doubles exactly
}

TEST_CASE("presets carry the shipped tuples") {
    using nlpr::cli::find_preset;
    REQUIRE(nlpr::cli::presets().size() == 4);
    auto* cave = find_preset("cave");
    REQUIRE(cave != nullptr);
    CHECK(cave->lambda1 == 0.7);
    CHECK(cave->lambda2 == 1e-4);
    CHECK(cave->rho == 1e-3);
    CHECK(cave->h == 0.15);
    CHECK(cave->Ls == 8);
    auto* pavia = find_preset("pavia");
    REQUIRE(pavia != nullptr);
    CHECK(pavia->lambda1 == 0.8);
    CHECK(pavia->lambda2 == 2e-4);
    CHECK(pavia->Ls == 20);
    auto* chik = find_preset("chikusei");
    REQUIRE(chik != nullptr);
    CHECK(chik->lambda1 == 1.0);
    CHECK(chik->rho == 0.095);
    CHECK(chik->h == 0.25);
    auto* ple = find_preset("pleiades");
    REQUIRE(ple != nullptr);
    CHECK(ple->lambda2 == 9e-3);
    CHECK(ple->h == 0.17);
    CHECK(ple->Ls == 4);
    CHECK(find_preset("nope") == nullptr);
}

TEST_CASE("run config: preset then explicit overrides, unknown keys rejected") {
    nlpr::cli::RunConfig rc;
    rc.apply({{"preset", "pavia"}, {"lambda2", "0.5"}});
    CHECK(rc.solver.lambda1 == 0.8);   // from the preset
    CHECK(rc.solver.lambda2 == 0.5);   // explicitly overridden
    CHECK(rc.solver.Ls == 20);

    CHECK_THROWS_AS(rc.apply({{"lambda3", "1"}}), nlpr::cli::UsageError);
    CHECK_THROWS_AS(rc.apply({{"preset", "unknown"}}), nlpr::cli::UsageError);
    CHECK_THROWS_AS(rc.apply({{"lambda1", "abc"}}), nlpr::cli::UsageError);
    CHECK_THROWS_AS(rc.apply({{"weight_mode", "sometimes"}}), nlpr::cli::UsageError);

    nlpr::cli::RunConfig inf;
    inf.apply({{"snr_l", "inf"}});
    CHECK(std::isinf(inf.snr_l));
}

TEST_CASE("simulate writes the advertised files and read-back is exact") {
    TempDir tmp;
    nlpr::cli::RunConfig rc;
    rc.out_dir = (tmp.path / "sim").string();
    rc.p = rc.q = 16;
    rc.bands = 4;
    rc.ms_bands = 2;
    rc.factor = 4;
    rc.solver.seed = 33;
    CHECK(nlpr::cli::run_simulate(rc) == 0);
    for (const char* name : {"gt.mbi", "yl.mbi", "yh.mbi", "spec.cfg"})
        CHECK(fs::exists(fs::path(rc.out_dir) / name));

    MultibandImage gt = read_mbi(fs::path(rc.out_dir) / "gt.mbi");
    MultibandImage expect = make_phantom(PhantomKind::Texture, 16, 16, 4, 33);
    CHECK(gt.data == expect.data);

    auto kv = read_kv_file(fs::path(rc.out_dir) / "spec.cfg");
    CHECK(kv.at("factor") == "4");
    Eigen::MatrixXd R = matrix_from_string(kv.at("spectral_response"));
    CHECK(R.rows() == 4);
    CHECK(R.cols() == 2);
}

TEST_CASE("fuse then metrics runs end to end in-process") {
    TempDir tmp;
    nlpr::cli::RunConfig sim;
    sim.out_dir = (tmp.path / "sim").string();
    sim.p = sim.q = 16;
    sim.bands = 4;
    sim.ms_bands = 2;
    sim.factor = 2;
    sim.solver.seed = 44;
    REQUIRE(nlpr::cli::run_simulate(sim) == 0);

    nlpr::cli::RunConfig fu;
    fu.yl_path = (fs::path(sim.out_dir) / "yl.mbi").string();
    fu.yh_path = (fs::path(sim.out_dir) / "yh.mbi").string();
    fu.degradation_path = (fs::path(sim.out_dir) / "spec.cfg").string();
    fu.out_dir = (tmp.path / "out").string();
    fu.solver.Ls = 3;
    fu.solver.max_iters = 30;
    REQUIRE(nlpr::cli::run_fuse(fu) == 0);
    CHECK(fs::exists(fs::path(fu.out_dir) / "zhat.mbi"));
    CHECK(fs::exists(fs::path(fu.out_dir) / "log.csv"));
    CHECK(fs::exists(fs::path(fu.out_dir) / "zhat_band00.pgm"));
    CHECK(fs::exists(fs::path(fu.out_dir) / "zhat_band03.pgm"));

    std::string log = slurp(fs::path(fu.out_dir) / "log.csv");
    CHECK(log.rfind("iter,objective,r1,r2,r3,ms", 0) == 0);

    nlpr::cli::RunConfig me;
    me.ref_path = (fs::path(sim.out_dir) / "gt.mbi").string();
    me.est_path = (fs::path(fu.out_dir) / "zhat.mbi").string();
    me.factor = 2;
    me.csv_path = (tmp.path / "m.csv").string();
    CHECK(nlpr::cli::run_metrics(me) == 0);
    std::string csv = slurp(me.csv_path);
    CHECK(csv.rfind("rmse,", 0) == 0);
}

TEST_CASE("usage errors surface for missing inputs") {
    nlpr::cli::RunConfig rc;
    CHECK_THROWS_AS(nlpr::cli::run_fuse(rc), nlpr::cli::UsageError);
    CHECK_THROWS_AS(nlpr::cli::run_metrics(rc), nlpr::cli::UsageError);
}

TEST_CASE("defaults follow the 3x3 search and patch setting") {
    SolverConfig cfg;
    CHECK(cfg.S == 1);
    CHECK(cfg.K == 1);
}

TEST_CASE("bench always carries the 8x8 ladder entry and the fixed schema") {
    TempDir tmp;
    nlpr::cli::RunConfig rc;
    rc.sizes = "16";  // 8 gets inserted regardless
    rc.csv_path = (tmp.path / "bench.csv").string();
    CHECK(nlpr::cli::run_bench(rc) == 0);
    std::string csv = slurp(rc.csv_path);
    CHECK(csv.rfind("size,n_h,L_s,fast_ms,dense_ms,ratio", 0) == 0);
    CHECK(csv.find("\n8x8,64,8,") != std::string::npos);
    CHECK(csv.find("16x16,256,8,") != std::string::npos);
}

TEST_CASE("ablate emits one CSV row per case and reruns reproduce it") {
    TempDir tmp;
    nlpr::cli::RunConfig rc;
    rc.out_dir = (tmp.path / "abl").string();
    rc.p = rc.q = 16;
    rc.bands = 4;
    rc.ms_bands = 2;
    rc.factor = 2;
    rc.solver.Ls = 3;
    rc.solver.max_iters = 25;
    rc.solver.seed = 3;
    CHECK(nlpr::cli::run_ablate(rc) == 0);
    std::string csv = slurp(fs::path(rc.out_dir) / "ablate.csv");
    CHECK(csv.rfind("case,rmse,", 0) == 0);
    for (const char* name : {"C1", "C2", "C3", "C4", "C5"})
        CHECK(csv.find(std::string("\n") + name + ",") != std::string::npos);

    rc.out_dir = (tmp.path / "abl2").string();
    CHECK(nlpr::cli::run_ablate(rc) == 0);
    CHECK(slurp(fs::path(rc.out_dir) / "ablate.csv") == csv);
}

#ifdef MBFUSE_PATH
TEST_CASE("mbfuse exit codes: 0 ok, 1 usage, 2 runtime") {
    TempDir tmp;
    auto run = [&](const std::string& args) {
        std::string cmd = std::string(MBFUSE_PATH) + " " + args + " > /dev/null 2>&1";
        int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    std::string out = (tmp.path / "sim").string();
    CHECK(run("simulate --out " + out + " --p 16 --q 16 --bands 3 --ms_bands 2 --factor 2") == 0);
    CHECK(run("fuse") == 1);                       // missing required inputs
    CHECK(run("nonsense") == 1);                   // unknown subcommand
    CHECK(run("simulate --lambda1 oops") == 1);    // bad value
    CHECK(run("metrics --ref " + out + "/gt.mbi --est " + out + "/missing.mbi") == 2);
    CHECK(run("--help") == 0);
}

TEST_CASE("mbfuse fuse is byte-reproducible across processes") {
    TempDir tmp;
    auto run = [&](const std::string& args) {
        std::string cmd = std::string(MBFUSE_PATH) + " " + args + " > /dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    std::string sim = (tmp.path / "sim").string();
    REQUIRE(run("simulate --out " + sim +
                " --p 16 --q 16 --bands 3 --ms_bands 2 --factor 2 --seed 9") == 0);
    std::string common = "fuse --yl " + sim + "/yl.mbi --yh " + sim + "/yh.mbi --degradation " +
                         sim + "/spec.cfg --subspace_dim 2 --max_iters 25 --deterministic 1";
    REQUIRE(run(common + " --out " + (tmp.path / "a").string()) == 0);
    REQUIRE(run(common + " --out " + (tmp.path / "b").string()) == 0);
    for (const char* name : {"zhat.mbi", "log.csv", "zhat_band00.pgm"}) {
        std::string a = slurp(tmp.path / "a" / name);
        CHECK(!a.empty());
        CHECK(a == slurp(tmp.path / "b" / name));
    }
}
#endif

}  // TEST_SUITE
