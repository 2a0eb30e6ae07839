#pragma once

#include "vpecg/delineation.h"
#include "vpecg/dictionary.h"
#include "vpecg/types.h"
#include "vpecg/varpro.h"

#include <cstdint>
#include <optional>
#include <vector>

namespace vpecg {

// Half-open range of beat indices (positions in EcgRecord::r_peaks).
struct BeatRange {
    std::int64_t begin = 0;
    std::int64_t end = 0;

    std::int64_t size() const { return end > begin ? end - begin : 0; }
};

/// floor(median RR / 3) in samples over the beats of the range. A beat i
/// contributes the interval r_peaks[i+1] - r_peaks[i]. Throws TooFewPeaks.
std::int64_t pre_r_samples(const EcgRecord& record, BeatRange range);

/// Beat i spans [R_i - pre_R, R_{i+1} - pre_R) with its time axis re-origined
/// at R_i. Beats that would need samples outside the record are skipped.
std::vector<BeatSignal> slice_beats(const EcgRecord& record, std::size_t lead, BeatRange range,
                                    std::int64_t pre_r);

/// Samplewise mean of R-aligned beats truncated to the shortest one.
BeatSignal mean_beat(const std::vector<BeatSignal>& beats);

/// Removes the straight line through the first and last sample.
BeatSignal detrend_endpoints(const BeatSignal& beat);

struct GaConfig {
    int population = 50;
    int generations = 100;
    int tournament = 3;
    int elitism = 2;
    double blend_alpha = 0.5;     // BLX-alpha crossover
    double mutation_rate = 0.2;   // per gene
    double mutation_sigma = 0.05; // fraction of the bound range
    std::uint64_t seed = 1;
};

/// Global search for the nonlinear parameters on the penalized objective.
NonlinearParams ga_init(const BeatSignal& beat, const ModelBounds& bounds, const GaConfig& ga,
                        const OptimizerConfig& opt, const ModelOptions& opts);

// Per-wave profile search run after the genetic stage. For each wave in turn
// (P, T, QRS) tau is stepped over its bounds with the other waves held fixed,
// and lambda is minimized at every step: a coarse grid, then Brent.
struct ScanConfig {
    bool enabled = true;
    double tau_step = 0.002;  // s
    int lambda_points = 6;
};

NonlinearParams profile_scan(const BeatSignal& beat, const ModelBounds& bounds, const NonlinearParams& start,
                             const ScanConfig& scan, const OptimizerConfig& opt, const ModelOptions& opts);

struct GateThresholds {
    double beat = 20.0;  // % PRD over the whole beat
    double p = 35.0;
    double qrs = 20.0;
    double t = 30.0;
};

struct GateReport {
    double prd_beat = 0.0;
    double prd_p = 0.0;
    double prd_qrs = 0.0;
    double prd_t = 0.0;
    bool passed = false;
};

/// PRD of the fit over the beat and over each wave's support tau +- 3/lambda.
GateReport gate(const BeatSignal& beat, const ModelFit& fit, const GateThresholds& th);

// Replacement settings when the automatic gate fails.
struct ManualAnnotation {
    std::optional<double> pre_r_s;
    std::optional<Interval> lambda[3];  // indexed by WaveKind
    std::optional<Interval> tau[3];
};

struct PipelineConfig {
    BeatRange train{0, 100};
    BeatRange test{100, 200};
    OptimizerConfig optimizer;
    GaConfig ga;
    ScanConfig scan;
    GateThresholds gate;
    ModelOptions model;
    int threads = 1;
};

struct BeatFit {
    std::int64_t beat_index = 0;
    std::int64_t start_sample = 0;
    std::int64_t r_sample = 0;
    ModelFit fit;
    Delineation delineation;
    bool ok = false;  // false when the fit could not be started (e.g. knots collide)
};

struct LeadResult {
    std::size_t lead = 0;
    std::int64_t pre_r = 0;
    GateReport gate;
    bool manual = false;
    NonlinearParams alpha_init;
    std::vector<BeatFit> fits;
};

/// slice -> mean beat -> GA -> gate -> refine on the mean with baseline ->
/// per-beat fits over the test range warm-started from the refined parameters.
/// When the gate fails and no annotation is given, `fits` is empty.
LeadResult process_record(const EcgRecord& record, std::size_t lead, const PipelineConfig& cfg,
                          const ManualAnnotation* manual = nullptr);

/// Record-length signal holding the fitted baseline over the fitted beats and
/// zero elsewhere.
Vector stitched_baseline(const EcgRecord& record, const LeadResult& result);

/// Sample range [begin, end) covered by the fitted beats.
std::pair<std::int64_t, std::int64_t> fitted_span(const LeadResult& result);

}  // namespace vpecg
