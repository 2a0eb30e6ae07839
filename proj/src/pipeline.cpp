#include "vpecg/pipeline.h"

#include "vpecg/errors.h"
#include "vpecg/evaluation.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace vpecg {

std::int64_t pre_r_samples(const EcgRecord& record, BeatRange range) {
    const auto& r = record.r_peaks;
    std::vector<std::int64_t> rr;
    for (auto i = std::max<std::int64_t>(range.begin, 0); i < range.end; ++i) {
        if (i + 1 >= static_cast<std::int64_t>(r.size())) break;
        rr.push_back(r[static_cast<std::size_t>(i + 1)] - r[static_cast<std::size_t>(i)]);
    }
    if (rr.empty()) throw TooFewPeaks("training range has no RR interval");
    std::sort(rr.begin(), rr.end());
    const std::size_t m = rr.size() / 2;
    const double median = rr.size() % 2 ? static_cast<double>(rr[m])
                                        : 0.5 * static_cast<double>(rr[m - 1] + rr[m]);
    return static_cast<std::int64_t>(std::floor(median / 3.0));
}

std::vector<BeatSignal> slice_beats(const EcgRecord& record, std::size_t lead, BeatRange range,
                                    std::int64_t pre_r) {
    if (lead >= record.num_leads()) throw ConfigError("lead index out of range");
    const auto& r = record.r_peaks;
    const auto& x = record.leads[lead];
    const auto n = static_cast<std::int64_t>(x.size());
    std::vector<BeatSignal> out;
    for (auto i = std::max<std::int64_t>(range.begin, 0); i < range.end; ++i) {
        if (i + 1 >= static_cast<std::int64_t>(r.size())) break;
        const auto ri = r[static_cast<std::size_t>(i)];
        const auto start = ri - pre_r;
        const auto end = r[static_cast<std::size_t>(i + 1)] - pre_r;
        if (start < 0 || end > n || end - start <= pre_r) continue;
        BeatSignal b = make_beat(x.segment(start, end - start), record.fs, pre_r);
        b.beat_index = i;
        b.start_sample = start;
        b.r_sample = ri;
        out.push_back(std::move(b));
    }
    return out;
}

BeatSignal mean_beat(const std::vector<BeatSignal>& beats) {
    if (beats.empty()) throw EmptyInput("no beats to average");
    Eigen::Index len = beats.front().size();
    for (const auto& b : beats) len = std::min(len, b.size());
    Vector sum = Vector::Zero(len);
    for (const auto& b : beats) sum += b.samples.head(len);
    BeatSignal out = beats.front();
    out.samples = sum / static_cast<double>(beats.size());
    out.time = beats.front().time.head(len);
    out.beat_index = -1;
    return out;
}

BeatSignal detrend_endpoints(const BeatSignal& beat) {
    BeatSignal out = beat;
    const Eigen::Index n = beat.size();
    if (n < 2) return out;
    const double a = beat.samples[0];
    const double b = beat.samples[n - 1];
    for (Eigen::Index i = 0; i < n; ++i) {
        out.samples[i] -= a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

namespace {

double segment_prd(const BeatSignal& beat, const Vector& approx, double lo, double hi) {
    std::vector<double> f;
    std::vector<double> g;
    for (Eigen::Index i = 0; i < beat.size(); ++i) {
        if (beat.time[i] >= lo && beat.time[i] <= hi) {
            f.push_back(beat.samples[i]);
            g.push_back(approx[i]);
        }
    }
    if (f.empty()) return std::numeric_limits<double>::infinity();
    return prd(f, g);
}

void apply_manual(ModelBounds& bounds, const ManualAnnotation* manual) {
    if (!manual) return;
    for (WaveKind w : {WaveKind::qrs, WaveKind::t, WaveKind::p}) {
        const auto i = static_cast<std::size_t>(w);
        if (manual->lambda[i]) bounds[w].lambda = *manual->lambda[i];
        if (manual->tau[i]) bounds[w].tau = *manual->tau[i];
    }
}

ModelBounds bounds_for(const BeatSignal& beat, const ManualAnnotation* manual) {
    ModelBounds b = ModelBounds::defaults(beat.window_start());
    apply_manual(b, manual);
    for (WaveKind w : {WaveKind::qrs, WaveKind::t, WaveKind::p}) {
        if (!b[w].valid()) throw ConfigError("invalid bounds for the " + std::string(to_string(w)) + " wave");
    }
    return b;
}

}  // namespace

GateReport gate(const BeatSignal& beat, const ModelFit& fit, const GateThresholds& th) {
    const Vector approx = fit.reconstruction();
    GateReport r;
    r.prd_beat = prd({beat.samples.data(), static_cast<std::size_t>(beat.size())},
                     {approx.data(), static_cast<std::size_t>(approx.size())});
    auto seg = [&](WaveKind w) {
        const double tau = fit.params.tau(w);
        const double lambda = fit.params.lambda(w);
        return segment_prd(beat, approx, tau - 3.0 / lambda, tau + 3.0 / lambda);
    };
    r.prd_p = seg(WaveKind::p);
    r.prd_qrs = seg(WaveKind::qrs);
    r.prd_t = seg(WaveKind::t);
    r.passed = r.prd_beat < th.beat && r.prd_p < th.p && r.prd_qrs < th.qrs && r.prd_t < th.t;
    return r;
}

LeadResult process_record(const EcgRecord& record, std::size_t lead, const PipelineConfig& cfg,
                          const ManualAnnotation* manual) {
    if (cfg.train.size() <= 0 || cfg.test.size() <= 0) throw ConfigError("empty beat range");
    if (cfg.train.end > cfg.test.begin) throw ConfigError("training range must precede the test range");

    LeadResult out;
    out.lead = lead;
    out.manual = manual != nullptr;
    out.pre_r = manual && manual->pre_r_s
                    ? static_cast<std::int64_t>(std::floor(*manual->pre_r_s * record.fs))
                    : pre_r_samples(record, cfg.train);

    const auto train = slice_beats(record, lead, cfg.train, out.pre_r);
    const BeatSignal mean = mean_beat(train);
    // The gating fit has no baseline term, so a residual trend of the averaged
    // baseline wander is removed first.
    const BeatSignal flat = detrend_endpoints(mean);
    const ModelBounds bounds = bounds_for(mean, manual);

    ModelOptions no_baseline = cfg.model;
    no_baseline.include_baseline = false;
    NonlinearParams ga = ga_init(flat, bounds, cfg.ga, cfg.optimizer, no_baseline);
    if (cfg.scan.enabled) ga = profile_scan(flat, bounds, ga, cfg.scan, cfg.optimizer, no_baseline);
    const ModelFit gated = fit(flat, ga, bounds, cfg.optimizer, no_baseline);
    out.gate = gate(flat, gated, cfg.gate);
    if (!out.gate.passed && !manual) return out;

    out.alpha_init = gated.params;
    if (cfg.model.include_baseline) {
        try {
            out.alpha_init = fit(mean, gated.params, bounds, cfg.optimizer, cfg.model).params;
        } catch (const InfeasibleInit&) {
        }
    }

    auto beats = slice_beats(record, lead, cfg.test, out.pre_r);
    out.fits.resize(beats.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < beats.size(); i = next++) {
            const BeatSignal& b = beats[i];
            BeatFit& bf = out.fits[i];
            bf.beat_index = b.beat_index;
            bf.start_sample = b.start_sample;
            bf.r_sample = b.r_sample;
            try {
                const ModelBounds bb = bounds_for(b, manual);
                bf.fit = fit(b, bb.clamp(out.alpha_init), bb, cfg.optimizer, cfg.model);
                bf.delineation = delineate(bf.fit, b);
                bf.ok = true;
            } catch (const Error&) {
                bf.ok = false;
            }
        }
    };
    const int threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(beats.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return out;
}

Vector stitched_baseline(const EcgRecord& record, const LeadResult& result) {
    Vector out = Vector::Zero(record.num_samples());
    for (const auto& bf : result.fits) {
        if (!bf.ok) continue;
        out.segment(bf.start_sample, bf.fit.baseline.size()) = bf.fit.baseline;
    }
    return out;
}

std::pair<std::int64_t, std::int64_t> fitted_span(const LeadResult& result) {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    bool any = false;
    for (const auto& bf : result.fits) {
        if (!bf.ok) continue;
        const auto end = bf.start_sample + bf.fit.baseline.size();
        lo = any ? std::min(lo, bf.start_sample) : bf.start_sample;
        hi = any ? std::max(hi, end) : end;
        any = true;
    }
    return {lo, hi};
}

}  // namespace vpecg
