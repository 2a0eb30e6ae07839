#include "vpecg/errors.h"
#include "vpecg/evaluation.h"
#include "vpecg/io.h"
#include "vpecg/pipeline.h"
#include "vpecg/synth.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using namespace vpecg;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitGateFailed = 3;

const std::set<std::string> kKnownKeys = {
    "seed",
    "synth.template", "synth.name", "synth.n_beats", "synth.fs", "synth.rr_mean", "synth.rr_std",
    "synth.lead_scales", "synth.snr_db", "synth.seed",
    "pipeline.train_begin", "pipeline.train_end", "pipeline.test_begin", "pipeline.test_end",
    "pipeline.leads", "pipeline.threads",
    "optimizer.max_iters", "optimizer.step_tol", "optimizer.obj_tol", "optimizer.penalty_scale",
    "optimizer.initial_radius",
    "ga.population", "ga.generations", "ga.tournament", "ga.elitism", "ga.blend_alpha",
    "ga.mutation_rate", "ga.mutation_sigma", "ga.seed",
    "scan.enabled", "scan.tau_step", "scan.lambda_points",
    "gate.beat", "gate.p", "gate.qrs", "gate.t",
    "model.include_baseline", "model.p_wave_nonnegative",
};

KeyValueConfig load_config(const std::string& path) {
    auto cfg = path.empty() ? KeyValueConfig::parse("") : KeyValueConfig::load(path);
    cfg.require_known(kKnownKeys);
    return cfg;
}

SynthConfig synth_config(const KeyValueConfig& kv) {
    SynthConfig sc;
    const std::string tmpl = kv.get_string("synth.template", "model");
    if (tmpl == "model") sc.tmpl = model_template();
    else if (tmpl == "nonmodel") sc.tmpl = nonmodel_template();
    else throw ConfigError("synth.template must be model or nonmodel");
    sc.n_beats = static_cast<int>(kv.get_int("synth.n_beats", sc.n_beats));
    sc.fs = kv.get_double("synth.fs", sc.fs);
    sc.rr_mean = kv.get_double("synth.rr_mean", sc.rr_mean);
    sc.rr_std = kv.get_double("synth.rr_std", sc.rr_std);
    sc.lead_scales = kv.get_doubles("synth.lead_scales", sc.lead_scales);
    sc.snr_db = kv.get_double("synth.snr_db", sc.snr_db);
    sc.seed = static_cast<std::uint64_t>(kv.get_int("synth.seed", kv.get_int("seed", 1)));
    sc.validate();
    return sc;
}

PipelineConfig pipeline_config(const KeyValueConfig& kv) {
    PipelineConfig pc;
    pc.test.begin = kv.get_int("pipeline.test_begin", 100);
    pc.test.end = kv.get_int("pipeline.test_end", 200);
    pc.train.end = kv.get_int("pipeline.train_end", pc.test.begin);
    pc.train.begin = kv.get_int("pipeline.train_begin", std::max<std::int64_t>(0, pc.train.end - 100));
    pc.threads = static_cast<int>(kv.get_int("pipeline.threads", 1));

    auto& o = pc.optimizer;
    o.max_iters = static_cast<int>(kv.get_int("optimizer.max_iters", o.max_iters));
    o.step_tol = kv.get_double("optimizer.step_tol", o.step_tol);
    o.obj_tol = kv.get_double("optimizer.obj_tol", o.obj_tol);
    o.penalty_scale = kv.get_double("optimizer.penalty_scale", o.penalty_scale);
    o.initial_radius = kv.get_double("optimizer.initial_radius", o.initial_radius);

    auto& g = pc.ga;
    g.population = static_cast<int>(kv.get_int("ga.population", g.population));
    g.generations = static_cast<int>(kv.get_int("ga.generations", g.generations));
    g.tournament = static_cast<int>(kv.get_int("ga.tournament", g.tournament));
    g.elitism = static_cast<int>(kv.get_int("ga.elitism", g.elitism));
    g.blend_alpha = kv.get_double("ga.blend_alpha", g.blend_alpha);
    g.mutation_rate = kv.get_double("ga.mutation_rate", g.mutation_rate);
    g.mutation_sigma = kv.get_double("ga.mutation_sigma", g.mutation_sigma);
    g.seed = static_cast<std::uint64_t>(kv.get_int("ga.seed", kv.get_int("seed", 1)));

    pc.scan.enabled = kv.get_bool("scan.enabled", pc.scan.enabled);
    pc.scan.tau_step = kv.get_double("scan.tau_step", pc.scan.tau_step);
    pc.scan.lambda_points = static_cast<int>(kv.get_int("scan.lambda_points", pc.scan.lambda_points));

    pc.gate.beat = kv.get_double("gate.beat", pc.gate.beat);
    pc.gate.p = kv.get_double("gate.p", pc.gate.p);
    pc.gate.qrs = kv.get_double("gate.qrs", pc.gate.qrs);
    pc.gate.t = kv.get_double("gate.t", pc.gate.t);

    pc.model.include_baseline = kv.get_bool("model.include_baseline", true);
    pc.model.p_wave_nonnegative = kv.get_bool("model.p_wave_nonnegative", true);

    if (pc.train.begin < 0 || pc.train.size() <= 0 || pc.test.size() <= 0 || pc.train.end > pc.test.begin) {
        throw ConfigError("beat ranges must be non-empty, ordered and non-overlapping");
    }
    return pc;
}

std::vector<std::size_t> selected_leads(const KeyValueConfig& kv, std::size_t available) {
    std::vector<std::size_t> out;
    if (!kv.has("pipeline.leads")) {
        for (std::size_t i = 0; i < available; ++i) out.push_back(i);
        return out;
    }
    for (double v : kv.get_doubles("pipeline.leads", {})) {
        if (v < 1 || v != std::floor(v) || v > static_cast<double>(available)) {
            throw ConfigError("pipeline.leads entries must be 1-based lead numbers");
        }
        out.push_back(static_cast<std::size_t>(v) - 1);
    }
    return out;
}

json gate_json(const LeadResult& r) {
    return json{{"lead", r.lead + 1},
                {"passed", r.gate.passed},
                {"manual", r.manual},
                {"prd_beat", r.gate.prd_beat},
                {"prd_p", r.gate.prd_p},
                {"prd_qrs", r.gate.prd_qrs},
                {"prd_t", r.gate.prd_t}};
}

std::string record_name(const fs::path& p) { return p.stem().string(); }

int run_simulate(const std::string& config, const fs::path& out) {
    const auto kv = load_config(config);
    const SynthConfig sc = synth_config(kv);
    const std::string name = kv.get_string("synth.name", "record");
    fs::create_directories(out);
    const NoisyRecord rec = generate(sc);
    write_record_csv(out / (name + ".csv"), rec.noisy);
    write_signal_csv(out / (name + ".clean.csv"), rec.clean.leads, rec.clean.fs);
    write_signal_csv(out / (name + ".baseline.csv"), rec.baseline, rec.noisy.fs);
    std::vector<FiducialRow> rows;
    for (std::size_t i = 0; i < rec.truth.size(); ++i) {
        auto r = fiducial_rows(name, "all", static_cast<std::int64_t>(i), rec.truth[i].r_sample, rec.truth[i].fiducials);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    write_fiducials_csv(out / (name + ".fiducials.csv"), rows);
    return 0;
}

enum class Stage { fit, denoise, delineate };

int run_pipeline(Stage stage, const fs::path& record_path, const std::string& config, const fs::path& out,
                 const std::string& manual_path) {
    const auto kv = load_config(config);
    const PipelineConfig pc = pipeline_config(kv);
    const EcgRecord rec = read_record_csv(record_path);
    std::optional<ManualAnnotation> manual;
    if (!manual_path.empty()) manual = read_manual_annotation(manual_path);
    const std::string name = record_name(record_path);
    fs::create_directories(out);

    std::vector<LeadResult> results;
    json leads = json::array();
    bool failed = false;
    for (std::size_t lead : selected_leads(kv, rec.num_leads())) {
        results.push_back(process_record(rec, lead, pc, manual ? &*manual : nullptr));
        leads.push_back(gate_json(results.back()));
        failed = failed || (!results.back().gate.passed && !manual);
    }

    if (failed) {
        const json status{{"status", "gate_failed"},
                          {"reason", "mean-beat PRD above the gate thresholds; supply --manual-sidecar"},
                          {"record", name},
                          {"leads", leads}};
        write_text_file(out / "status.json", status.dump(2) + "\n");
        std::cerr << status.dump() << '\n';
        return kExitGateFailed;
    }

    write_fits_csv(out / "fits.csv", results);
    if (stage == Stage::denoise) {
        std::int64_t lo = rec.num_samples();
        std::int64_t hi = 0;
        for (const auto& r : results) {
            const auto [a, b] = fitted_span(r);
            if (a < b) {
                lo = std::min(lo, a);
                hi = std::max(hi, b);
            }
        }
        std::vector<Vector> den;
        for (const auto& r : results) {
            const Vector full = rec.leads[r.lead] - stitched_baseline(rec, r);
            den.push_back(lo < hi ? Vector(full.segment(lo, hi - lo)) : Vector());
        }
        write_signal_csv(out / "denoised.csv", den, rec.fs, lo < hi ? lo : 0);
    }
    if (stage == Stage::delineate) {
        std::vector<FiducialRow> rows;
        for (const auto& r : results) {
            for (const auto& bf : r.fits) {
                if (!bf.ok) continue;
                auto fr = fiducial_rows(name, std::to_string(r.lead + 1), bf.beat_index, bf.r_sample, bf.delineation);
                rows.insert(rows.end(), fr.begin(), fr.end());
            }
        }
        write_fiducials_csv(out / "fiducials.csv", rows);
    }
    const json status{{"status", "ok"}, {"record", name}, {"leads", leads}};
    write_text_file(out / "status.json", status.dump(2) + "\n");
    return 0;
}

fs::path resolve_truth(const fs::path& truth) {
    if (!fs::is_directory(truth)) return truth;
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(truth)) {
        const std::string f = e.path().filename().string();
        if (f.size() > 10 && f.ends_with(".clean.csv")) found.push_back(e.path());
    }
    if (found.size() != 1) throw ConfigError(truth.string() + ": expected exactly one *.clean.csv");
    const std::string f = found.front().filename().string();
    return truth / (f.substr(0, f.size() - 10) + ".csv");
}

fs::path sibling(const fs::path& record, const std::string& suffix) {
    return record.parent_path() / (record.stem().string() + suffix);
}

// Median over beats of the per-beat KP deviation, the ST window taken from the
// reference QRS end of each beat.
double record_kp_deviation(const std::vector<Vector>& filtered, const std::vector<Vector>& clean,
                           const std::vector<AnnotatedBeat>& truth, double fs) {
    std::vector<double> dev;
    const Eigen::Index n = clean.front().size();
    for (const auto& b : truth) {
        double lo_s = kStFallbackStart;
        double hi_s = kStFallbackEnd;
        if (b.fiducials.qrs.end) {
            lo_s = *b.fiducials.qrs.end + kStWindowStart;
            hi_s = *b.fiducials.qrs.end + kStWindowEnd;
        }
        const auto lo = b.r_sample + static_cast<std::int64_t>(std::llround(lo_s * fs));
        const auto hi = b.r_sample + static_cast<std::int64_t>(std::llround(hi_s * fs));
        if (lo < 0 || hi > n) continue;
        dev.push_back(kp_deviation(kp(filtered, lo, hi), kp(clean, lo, hi)));
    }
    const auto q = quartiles(dev);
    return q.median ? *q.median : std::numeric_limits<double>::quiet_NaN();
}

int run_evaluate(const fs::path& truth_arg, const fs::path& pred, const fs::path& out) {
    const fs::path truth = resolve_truth(truth_arg);
    const std::string name = record_name(truth);
    fs::create_directories(out);

    std::vector<MetricsRow> rows;
    std::optional<DelineationScore> score;

    const fs::path den_path = pred / "denoised.csv";
    const fs::path fid_path = pred / "fiducials.csv";
    if (!fs::exists(den_path) && !fs::exists(fid_path)) {
        throw IoError(pred.string() + ": neither denoised.csv nor fiducials.csv found");
    }
    const auto truth_rows = read_fiducials_csv(sibling(truth, ".fiducials.csv"));
    const auto truth_beats = group_fiducials(truth_rows);
    const auto ref_it = truth_beats.find("all");
    if (ref_it == truth_beats.end()) throw ParseError(sibling(truth, ".fiducials.csv").string(), 0, "no reference rows");

    if (fs::exists(den_path)) {
        const EcgRecord noisy = read_record_csv(truth);
        const SignalTable clean = read_signal_csv(sibling(truth, ".clean.csv"));
        const SignalTable den = read_signal_csv(den_path);
        if (den.leads.size() > noisy.num_leads()) throw ConfigError("denoised.csv has more leads than the record");
        const auto lo = static_cast<std::int64_t>(std::llround(den.start_time * noisy.fs));
        const Eigen::Index len = den.leads.front().size();
        if (lo < 0 || lo + len > noisy.num_samples()) throw ConfigError("denoised.csv exceeds the record");

        std::vector<Vector> spline(den.leads.size());
        for (std::size_t j = 0; j < den.leads.size(); ++j) {
            const auto anchors = pq_anchors(noisy.r_peaks, noisy.fs);
            const Vector& x = noisy.leads[j];
            spline[j] = reference_spline_denoise({x.data(), static_cast<std::size_t>(x.size())}, anchors);
        }

        std::vector<AnnotatedBeat> span_truth;
        for (const auto& b : ref_it->second) {
            if (b.r_sample >= lo && b.r_sample < lo + len) span_truth.push_back(b);
        }
        auto window = [&](const std::vector<Vector>& leads) {
            std::vector<Vector> v;
            for (std::size_t j = 0; j < den.leads.size(); ++j) v.push_back(leads[j].segment(lo, len));
            return v;
        };
        const auto clean_w = window(clean.leads);
        const auto noisy_w = window(noisy.leads);
        const auto spline_w = window(spline);
        auto shifted = span_truth;
        for (auto& b : shifted) b.r_sample -= lo;

        const std::vector<std::pair<std::string, const std::vector<Vector>*>> methods = {
            {"proposed", &den.leads}, {"spline", &spline_w}, {"none", &noisy_w}};
        for (const auto& [method, sig] : methods) {
            const double kp_dev = record_kp_deviation(*sig, clean_w, shifted, noisy.fs);
            for (std::size_t j = 0; j < den.leads.size(); ++j) {
                auto sp = [](const Vector& v) { return std::span<const double>(v.data(), static_cast<std::size_t>(v.size())); };
                MetricsRow r;
                r.method = method;
                r.record = name;
                r.lead = std::to_string(j + 1);
                r.snr_improvement = snr_improvement(sp(clean_w[j]), sp(noisy_w[j]), sp((*sig)[j]));
                r.rho = correlation(sp(clean_w[j]), sp((*sig)[j]));
                r.l_op = l_operator(sp(clean_w[j]), sp((*sig)[j]));
                r.kp_dev = kp_dev;
                rows.push_back(r);
            }
        }
    }

    if (fs::exists(fid_path)) {
        const auto pred_beats = group_fiducials(read_fiducials_csv(fid_path));
        std::vector<std::vector<AnnotatedBeat>> channels;
        for (const auto& [lead, beats] : pred_beats) channels.push_back(beats);
        const EcgRecord rec = read_record_csv(truth);
        score = score_delineation(channels, ref_it->second, rec.fs);

        std::ofstream csv(out / "delineation.csv", std::ios::binary | std::ios::trunc);
        csv << "kind,annotated,detected,se,mean_ms,std_ms,group\n";
        for (const auto& s : score->kinds) {
            csv << to_string(s.kind) << ',' << s.annotated << ',' << s.detected << ',' << format_double(s.se) << ','
                << format_double(s.mean_ms) << ',' << format_double(s.std_ms) << ','
                << (s.detected ? std::string(to_string(s.group)) : std::string()) << '\n';
        }
        if (!csv) throw IoError("cannot write delineation.csv");
    }

    write_metrics_csv(out / "metrics.csv", rows);
    write_summary_json(out / "summary.json", rows, score);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variable projection ECG modeling: simulate, fit, denoise, delineate, evaluate"};
    app.require_subcommand(1);

    std::string config, out, record, manual, truth, pred;

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic record with reference annotations");
    sim->add_option("--config", config, "key=value configuration file");
    sim->add_option("--out", out, "output directory")->required();

    std::vector<std::pair<CLI::App*, Stage>> stages;
    for (auto [label, stage, help] : {std::tuple{"fit", Stage::fit, "Fit the beat model to every test beat"},
                                      std::tuple{"denoise", Stage::denoise, "Remove the fitted baseline wander"},
                                      std::tuple{"delineate", Stage::delineate, "Locate wave onsets, peaks and ends"}}) {
        auto* sub = app.add_subcommand(label, help);
        sub->add_option("--record", record, "record CSV (with <name>.rpeaks.csv next to it)")->required();
        sub->add_option("--config", config, "key=value configuration file");
        sub->add_option("--out", out, "output directory")->required();
        sub->add_option("--manual-sidecar", manual, "annotation overriding pre_R and bounds");
        stages.emplace_back(sub, stage);
    }

    auto* eval = app.add_subcommand("evaluate", "Score predictions against a simulated reference");
    eval->add_option("--truth", truth, "reference record CSV or directory written by simulate")->required();
    eval->add_option("--pred", pred, "directory written by denoise or delineate")->required();
    eval->add_option("--out", out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return run_simulate(config, out);
        for (const auto& [sub, stage] : stages) {
            if (*sub) return run_pipeline(stage, record, config, out, manual);
        }
        if (*eval) return run_evaluate(truth, pred, out);
    } catch (const vpecg::Error& e) {
        std::cerr << json{{"status", "error"}, {"reason", e.what()}}.dump() << '\n';
        return kExitError;
    } catch (const fs::filesystem_error& e) {
        std::cerr << json{{"status", "error"}, {"reason", e.what()}}.dump() << '\n';
        return kExitError;
    }
    return kExitError;
}
