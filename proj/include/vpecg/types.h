#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace vpecg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class WaveKind { qrs, t, p };

std::string_view to_string(WaveKind wave);

// One sliced heartbeat. The time axis has its origin at the beat's R peak.
struct BeatSignal {
    Vector samples;              // mV
    Vector time;                 // s, R-relative, strictly increasing
    double fs = 0.0;             // Hz
    std::int64_t beat_index = -1;
    std::int64_t start_sample = 0;  // position of samples[0] in the record
    std::int64_t r_sample = 0;      // position of the R peak in the record

    Eigen::Index size() const { return samples.size(); }
    double window_start() const { return time.size() ? time[0] : 0.0; }
};

// Multi-lead recording with externally supplied R peaks.
struct EcgRecord {
    std::vector<Vector> leads;          // mV, equal lengths
    double fs = 0.0;                    // Hz
    std::vector<std::int64_t> r_peaks;  // sample indices, strictly increasing

    std::size_t num_leads() const { return leads.size(); }
    Eigen::Index num_samples() const { return leads.empty() ? 0 : leads.front().size(); }
};

// Builds a BeatSignal whose R peak sits at sample index r_offset.
BeatSignal make_beat(Vector samples, double fs, Eigen::Index r_offset);

// Translations and dilations of the three waves. The baseline component reuses
// the QRS and T entries.
struct NonlinearParams {
    double lambda_qrs = 0.0;
    double tau_qrs = 0.0;
    double lambda_t = 0.0;
    double tau_t = 0.0;
    double lambda_p = 0.0;
    double tau_p = 0.0;

    static constexpr std::size_t size = 6;

    std::array<double, size> to_array() const {
        return {lambda_qrs, tau_qrs, lambda_t, tau_t, lambda_p, tau_p};
    }
    static NonlinearParams from_array(const std::array<double, size>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }

    double lambda(WaveKind w) const;
    double tau(WaveKind w) const;

    bool operator==(const NonlinearParams&) const = default;
};

// Index of each entry in NonlinearParams::to_array().
enum ParamIndex : std::size_t {
    kLambdaQrs = 0,
    kTauQrs = 1,
    kLambdaT = 2,
    kTauT = 3,
    kLambdaP = 4,
    kTauP = 5,
};

inline std::size_t lambda_index(WaveKind w) {
    switch (w) {
        case WaveKind::qrs: return kLambdaQrs;
        case WaveKind::t: return kLambdaT;
        case WaveKind::p: return kLambdaP;
    }
    return kLambdaQrs;
}
inline std::size_t tau_index(WaveKind w) { return lambda_index(w) + 1; }

}  // namespace vpecg
