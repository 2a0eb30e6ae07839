#pragma once

#include "vpecg/types.h"
#include "vpecg/varpro.h"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace vpecg {

struct Extremum {
    Eigen::Index index = 0;
    double time = 0.0;
    double value = 0.0;
    int sign = 0;  // +1 local maximum, -1 local minimum
};

// Relative thresholds of the derivative-based rule for one wave.
struct DelineationThresholds {
    double divisor = 2.0;  // extrema below max/divisor (above min/divisor) are dropped
    double k_on = 0.25;
    double k_end = 0.4;
};

DelineationThresholds default_thresholds(WaveKind wave);

/// Local extrema of the derivative that survive the significance thresholds,
/// in chronological order. Throws NoSignificantExtrema if none survive.
std::vector<Extremum> significant_extrema(std::span<const double> deriv,
                                          std::span<const double> grid, double divisor);

struct WaveBounds {
    Eigen::Index onset = 0;
    Eigen::Index end = 0;
    bool onset_fallback = false;
    bool end_fallback = false;
};

/// Onset left of the first and end right of the last significant extremum:
/// the nearer of (1) |deriv| dropping below k * |deriv(t_extremum)| and (2) the
/// first opposite-signed local extremum. If neither exists, the edge of the
/// support [tau - 3/lambda, tau + 3/lambda] is used and flagged.
WaveBounds locate_bounds(std::span<const double> deriv, std::span<const double> grid,
                         const DelineationThresholds& th, double tau, double lambda);

enum FiducialFlag : std::uint32_t {
    kOnsetFallback = 1u << 0,
    kEndFallback = 1u << 1,
    kDroppedOrdering = 1u << 2,
};

struct WaveFiducials {
    std::optional<double> onset;  // s, R-relative
    std::optional<double> peak;
    std::optional<double> end;
    std::uint32_t flags = 0;

    bool present() const { return onset && peak && end; }
};

struct Delineation {
    WaveFiducials p;
    WaveFiducials qrs;
    WaveFiducials t;

    const WaveFiducials& operator[](WaveKind w) const;
    WaveFiducials& operator[](WaveKind w);
};

/// Fiducials of one component given its samples and analytic derivative.
WaveFiducials delineate_component(std::span<const double> component, std::span<const double> deriv,
                                  std::span<const double> grid, const DelineationThresholds& th,
                                  double tau, double lambda);

/// Analytic time derivative of one fitted component on the beat grid.
Vector component_derivative(const ModelFit& fit, const BeatSignal& beat, WaveKind wave);

/// Delineates all three waves of a fitted beat and enforces the ordering
/// P.end <= QRS.onset, QRS.end <= T.onset (violating waves are dropped).
Delineation delineate(const ModelFit& fit, const BeatSignal& beat);

void enforce_ordering(Delineation& d);

}  // namespace vpecg
