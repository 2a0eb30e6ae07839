#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("vpecg_cli_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args, const fs::path& err) {
    const std::string cmd = std::string(VPECG_CLI) + " " + args + " 2> " + err.string() + " > /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmall =
    "synth.n_beats=30\nsynth.snr_db=0\nsynth.lead_scales=1\nsynth.name=rec\n"
    "pipeline.train_begin=0\npipeline.train_end=10\npipeline.test_begin=10\npipeline.test_end=16\n";

}  // namespace

TEST_CASE("cli workflow and exit codes") {
    TempDir dir;
    const auto cfg = dir.path / "run.cfg";
    std::ofstream(cfg) << kSmall;
    const auto err = dir.path / "stderr.txt";
    const auto sim = dir.path / "sim";
    REQUIRE(run("simulate --config " + cfg.string() + " --out " + sim.string(), err) == 0);
    for (const char* f : {"rec.csv", "rec.rpeaks.csv", "rec.clean.csv", "rec.baseline.csv", "rec.fiducials.csv"})
        CHECK(fs::exists(sim / f));
    const auto record = (sim / "rec.csv").string();

    SUBCASE("gate failure") {
        const auto strict = dir.path / "strict.cfg";
        std::ofstream(strict) << kSmall << "gate.beat=0\ngate.p=0\ngate.qrs=0\ngate.t=0\n";
        const auto out = dir.path / "gate";
        CHECK(run("fit --record " + record + " --config " + strict.string() + " --out " + out.string(), err) == 3);
        const auto reason = nlohmann::json::parse(slurp(err));
        CHECK(reason["status"] == "gate_failed");
        CHECK(reason["leads"][0]["passed"] == false);
        CHECK(nlohmann::json::parse(slurp(out / "status.json"))["status"] == "gate_failed");
        CHECK_FALSE(fs::exists(out / "fits.csv"));

        const auto sidecar = dir.path / "manual.cfg";
        std::ofstream(sidecar) << "pre_r_s=0.3\n";
        CHECK(run("fit --record " + record + " --config " + strict.string() + " --out " + out.string() +
                      " --manual-sidecar " + sidecar.string(),
                  err) == 0);
        const auto fits = slurp(out / "fits.csv");
        CHECK(std::count(fits.begin(), fits.end(), '\n') == 7);
        CHECK(nlohmann::json::parse(slurp(out / "status.json"))["leads"][0]["manual"] == true);
    }
    SUBCASE("denoise and evaluate") {
        const auto den = dir.path / "den";
        REQUIRE(run("denoise --record " + record + " --config " + cfg.string() + " --out " + den.string(), err) == 0);
        CHECK(fs::exists(den / "denoised.csv"));
        const auto ev = dir.path / "eval";
        REQUIRE(run("evaluate --truth " + sim.string() + " --pred " + den.string() + " --out " + ev.string(), err) == 0);
        const auto summary = nlohmann::json::parse(slurp(ev / "summary.json"));
        CHECK(summary["denoising"]["proposed"]["rows"] == 1);
        CHECK(summary["denoising"]["proposed"]["snr_improvement"]["median"].get<double>() >
              summary["denoising"]["none"]["snr_improvement"]["median"].get<double>());
        CHECK(slurp(ev / "metrics.csv").rfind("method,record,lead,snr_improvement,rho,l_op,kp_dev\n", 0) == 0);
    }
    SUBCASE("configuration errors") {
        const auto bad = dir.path / "bad.cfg";
        std::ofstream(bad) << "optimizer.max_iter=3\n";
        CHECK(run("fit --record " + record + " --config " + bad.string() + " --out " + (dir.path / "x").string(),
                  err) == 1);
        CHECK(nlohmann::json::parse(slurp(err))["reason"].get<std::string>().find("optimizer.max_iter") !=
              std::string::npos);
        CHECK(run("fit --record " + (dir.path / "missing.csv").string() + " --out " + (dir.path / "x").string(),
                  err) == 1);
        CHECK(run("", err) != 0);
    }
}
