#include "vpecg/errors.h"
#include "vpecg/io.h"
#include "vpecg/synth.h"

#include <doctest.h>
#include <json.hpp>

#include <gsl/gsl_statistics_double.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace vpecg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("vpecg_io_" + std::to_string(rd()));
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

void spit(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("double formatting reads back exactly") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, i % 20 - 10);
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(3.0) == "3");
}

TEST_CASE("record roundtrip is bitwise") {
    TempDir dir;
    SynthConfig cfg;
    cfg.n_beats = 10;
    cfg.lead_scales = {1.0, -0.7};
    cfg.snr_db = 0.0;
    const auto rec = generate(cfg).noisy;
    const auto path = dir.path / "rec.csv";
    write_record_csv(path, rec);
    CHECK(fs::exists(rpeaks_path(path)));
    CHECK(rpeaks_path(path).filename() == "rec.rpeaks.csv");
    const auto back = read_record_csv(path);
    CHECK(back.fs == rec.fs);
    CHECK(back.r_peaks == rec.r_peaks);
    REQUIRE(back.num_leads() == 2);
    for (std::size_t l = 0; l < 2; ++l) CHECK(back.leads[l] == rec.leads[l]);
    CHECK(slurp(path).rfind("time_s,lead1,lead2\n", 0) == 0);
}

TEST_CASE("record parsing errors") {
    TempDir dir;
    const auto path = dir.path / "r.csv";
    spit(path, "time_s,lead1,lead2\n0,1,2\n0.002,1,2\n0.004,1,2\n");
    SUBCASE("missing sidecar names the sidecar") {
        try {
            read_record_csv(path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("r.rpeaks.csv") != std::string::npos);
        }
    }
    SUBCASE("parsed shape") {
        spit(rpeaks_path(path), "1\n");
        const auto rec = read_record_csv(path);
        CHECK(rec.num_leads() == 2);
        CHECK(rec.num_samples() == 3);
        CHECK(rec.fs == 500.0);
    }
    SUBCASE("jittered time column") {
        spit(path, "time_s,lead1\n0,1\n0.002,1\n0.00401,1\n0.006,1\n");
        spit(rpeaks_path(path), "1\n");
        CHECK_THROWS_AS(read_record_csv(path), NonUniformSampling);
    }
    SUBCASE("bad field reports its line") {
        spit(path, "time_s,lead1\n0,1\n0.002,x\n");
        spit(rpeaks_path(path), "1\n");
        try {
            read_record_csv(path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
    }
    SUBCASE("bad header") {
        spit(path, "t,lead1\n0,1\n0.002,1\n");
        CHECK_THROWS_AS(read_signal_csv(path), ParseError);
    }
    SUBCASE("R peak outside the record") {
        spit(rpeaks_path(path), "1\n7\n");
        CHECK_THROWS_AS(read_record_csv(path), ParseError);
    }
}

TEST_CASE("signal table keeps its start time") {
    TempDir dir;
    const std::vector<Vector> leads{Vector::LinSpaced(50, 0.0, 1.0)};
    write_signal_csv(dir.path / "s.csv", leads, 250.0, 1000);
    const auto t = read_signal_csv(dir.path / "s.csv");
    CHECK(t.fs == 250.0);
    CHECK(t.start_time == doctest::Approx(4.0));
    CHECK(t.leads[0] == leads[0]);
}

TEST_CASE("key-value config") {
    const auto cfg = KeyValueConfig::parse(
        "# comment\n\noptimizer.max_iters = 200\nsynth.lead_scales=1, 0.5\nflag=true\nname = abc \n", "c.cfg");
    CHECK(cfg.get_int("optimizer.max_iters", 0) == 200);
    CHECK(cfg.get_doubles("synth.lead_scales", {}) == std::vector<double>{1.0, 0.5});
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_string("name", "") == "abc");
    CHECK(cfg.get_double("missing", 2.5) == 2.5);
    CHECK_NOTHROW(cfg.require_known({"optimizer.max_iters", "synth.lead_scales", "flag", "name"}));
    CHECK_THROWS_AS(cfg.require_known({"flag"}), ConfigError);
    CHECK_THROWS_AS(cfg.get_double("name", 0.0), ParseError);
    CHECK_THROWS_AS(KeyValueConfig::parse("a=1\na=2\n"), ParseError);
    try {
        KeyValueConfig::parse("a=1\nnot a pair\n", "x.cfg");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("manual annotation sidecar") {
    TempDir dir;
    const auto path = dir.path / "m.cfg";
    spit(path, "pre_r_s=0.25\np.tau_min=-0.2\np.tau_max=-0.1\nt.lambda_min=15\nt.lambda_max=25\n");
    const auto m = read_manual_annotation(path);
    CHECK(*m.pre_r_s == 0.25);
    const auto p = static_cast<int>(WaveKind::p);
    const auto t = static_cast<int>(WaveKind::t);
    CHECK(m.tau[p]->lo == -0.2);
    CHECK(m.tau[p]->hi == -0.1);
    CHECK(m.lambda[t]->lo == 15.0);
    CHECK_FALSE(m.lambda[p]);
    spit(path, "p.tau_min=-0.2\n");
    CHECK_THROWS_AS(read_manual_annotation(path), ConfigError);
    spit(path, "p.tau_min=-0.1\np.tau_max=-0.2\n");
    CHECK_THROWS_AS(read_manual_annotation(path), ConfigError);
    spit(path, "q.tau_min=-0.1\n");
    CHECK_THROWS_AS(read_manual_annotation(path), ConfigError);
}

TEST_CASE("fiducials roundtrip") {
    TempDir dir;
    Delineation d;
    d.p = {-0.2, -0.15, -0.1, 0};
    d.qrs = {-0.04, 0.002, 0.046, kEndFallback};
    d.t.flags = kDroppedOrdering;
    auto rows = fiducial_rows("rec1", "1", 7, 3500, d);
    const auto more = fiducial_rows("rec1", "1", 8, 4010, d);
    rows.insert(rows.end(), more.begin(), more.end());
    REQUIRE(rows.size() == 6);
    write_fiducials_csv(dir.path / "f.csv", rows);
    CHECK(slurp(dir.path / "f.csv").rfind("record,beat,lead,r_sample,wave,onset_s,peak_s,end_s,flags\n", 0) == 0);
    const auto back = read_fiducials_csv(dir.path / "f.csv");
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].record == rows[i].record);
        CHECK(back[i].beat == rows[i].beat);
        CHECK(back[i].wave == rows[i].wave);
        CHECK(back[i].fiducials.onset == rows[i].fiducials.onset);
        CHECK(back[i].fiducials.peak == rows[i].fiducials.peak);
        CHECK(back[i].fiducials.end == rows[i].fiducials.end);
        CHECK(back[i].fiducials.flags == rows[i].fiducials.flags);
    }
    const auto grouped = group_fiducials(back);
    REQUIRE(grouped.count("1") == 1);
    const auto& beats = grouped.at("1");
    REQUIRE(beats.size() == 2);
    CHECK(beats[0].r_sample == 3500);
    CHECK(beats[1].fiducials.qrs.peak == 0.002);
    CHECK_FALSE(beats[1].fiducials.t.present());
}

TEST_CASE("empty outputs") {
    TempDir dir;
    write_fits_csv(dir.path / "fits.csv", {});
    write_fiducials_csv(dir.path / "fid.csv", {});
    write_metrics_csv(dir.path / "m.csv", {});
    write_summary_json(dir.path / "s.json", {}, std::nullopt);
    const auto fits = slurp(dir.path / "fits.csv");
    CHECK(std::count(fits.begin(), fits.end(), '\n') == 1);
    CHECK(fits.rfind("lead,beat,r_sample,lambda_qrs,tau_qrs,lambda_t,tau_t,lambda_p,tau_p,c0,", 0) == 0);
    CHECK(fits.find(",c16,residual_sq,converged\n") != std::string::npos);
    CHECK(slurp(dir.path / "m.csv") == "method,record,lead,snr_improvement,rho,l_op,kp_dev\n");
    CHECK(read_fiducials_csv(dir.path / "fid.csv").empty());
    const auto j = nlohmann::json::parse(slurp(dir.path / "s.json"));
    CHECK(j["denoising"].empty());
    CHECK(j["delineation"].is_null());

    const double nan = std::numeric_limits<double>::quiet_NaN();
    write_summary_json(dir.path / "s2.json", {{"vp", "r", "1", nan, nan, nan, nan}}, std::nullopt);
    const auto j2 = nlohmann::json::parse(slurp(dir.path / "s2.json"));
    CHECK(j2["denoising"]["vp"]["snr_improvement"]["median"].is_null());
    CHECK(j2["denoising"]["vp"]["rho"]["p25"].is_null());
}

TEST_CASE("summary quartiles match a sort-based oracle") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd(10.0, 3.0);
    for (std::size_t n : {1u, 2u, 5u, 60u, 61u}) {
        std::vector<double> v(n);
        for (auto& x : v) x = nd(rng);
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        const auto q = quartiles(v);
        CHECK(*q.median == doctest::Approx(gsl_stats_quantile_from_sorted_data(sorted.data(), 1, n, 0.5)));
        CHECK(*q.p25 == doctest::Approx(gsl_stats_quantile_from_sorted_data(sorted.data(), 1, n, 0.25)));
        CHECK(*q.p75 == doctest::Approx(gsl_stats_quantile_from_sorted_data(sorted.data(), 1, n, 0.75)));
    }
    CHECK_FALSE(quartiles({}).median);

    TempDir dir;
    std::vector<MetricsRow> rows;
    std::vector<double> snr;
    for (int i = 0; i < 9; ++i) {
        rows.push_back({"vp", "r" + std::to_string(i), "1", nd(rng), 0.99, 0.98, 0.001});
        rows.push_back({"spline", "r" + std::to_string(i), "1", 1.0, 0.5, 0.5, 0.0});
        snr.push_back(rows[rows.size() - 2].snr_improvement);
    }
    write_summary_json(dir.path / "s.json", rows, std::nullopt);
    std::sort(snr.begin(), snr.end());
    const auto j = nlohmann::json::parse(slurp(dir.path / "s.json"));
    CHECK(j["denoising"]["vp"]["rows"] == 9);
    CHECK(j["denoising"]["vp"]["snr_improvement"]["median"].get<double>() == snr[4]);
    CHECK(j["denoising"]["spline"]["rho"]["median"].get<double>() == 0.5);
}

TEST_CASE("unwritable output") {
    CHECK_THROWS_AS(write_text_file("/nonexistent_dir_for_test/x.txt", "x"), IoError);
}
