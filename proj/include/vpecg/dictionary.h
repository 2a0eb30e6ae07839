#pragma once

#include "vpecg/types.h"

#include <array>
#include <span>

namespace vpecg {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const noexcept { return v >= lo && v <= hi; }
    double width() const noexcept { return hi - lo; }
    double clamp(double v) const noexcept { return v < lo ? lo : (v > hi ? hi : v); }
};

struct WaveDictionaryConfig {
    WaveKind wave = WaveKind::qrs;
    int num_hermite = 0;
    bool has_sigmoid = false;
    Interval lambda;  // 1/s
    Interval tau;     // s, relative to the R peak

    int num_columns() const noexcept { return num_hermite + (has_sigmoid ? 1 : 0); }
    bool valid() const noexcept;
};

// Default dictionary settings. The P translation lower bound is 44 ms after
// the window start, so it depends on where the beat was sliced.
WaveDictionaryConfig default_wave_config(WaveKind wave, double window_start);

// Bounds for all three waves. Indexable by WaveKind.
struct ModelBounds {
    WaveDictionaryConfig qrs;
    WaveDictionaryConfig t;
    WaveDictionaryConfig p;

    static ModelBounds defaults(double window_start);

    const WaveDictionaryConfig& operator[](WaveKind w) const;
    WaveDictionaryConfig& operator[](WaveKind w);

    Interval param_interval(std::size_t index) const;
    bool contains(const NonlinearParams& params) const;
    NonlinearParams clamp(const NonlinearParams& params) const;
    NonlinearParams center() const;
};

/// Sampled atoms of one wave: hermite orders 0..num_hermite-1, then the
/// sigmoid if configured. Throws BoundsViolation outside the configured box.
Matrix build_wave_columns(const WaveDictionaryConfig& cfg, double lambda, double tau,
                          std::span<const double> grid);

struct WaveJacobian {
    Matrix d_dlambda;
    Matrix d_dtau;
};

WaveJacobian build_wave_jacobian(const WaveDictionaryConfig& cfg, double lambda, double tau,
                                 std::span<const double> grid);

/// Time derivatives of the sampled atoms (same column layout).
Matrix build_wave_time_derivs(const WaveDictionaryConfig& cfg, double lambda, double tau,
                              std::span<const double> grid);

// Support ordering P < QRS < T inside the beat, expressed in 1-based sample
// coordinates. Each entry of `excess` is positive when that inequality is
// violated, by that many samples:
//   0: 1 <= tau_p - 3/lambda_p
//   1: tau_p + 3/lambda_p <= tau_qrs - 3/lambda_qrs
//   2: tau_qrs + 3/lambda_qrs <= tau_t - 3/lambda_t
//   3: tau_t + 3/lambda_t <= N
struct OrderingReport {
    std::array<double, 4> excess{};
    bool feasible = true;
};

OrderingReport check_ordering(const NonlinearParams& params, double window_start,
                              Eigen::Index n_samples, double fs);

/// d excess_i / d param_k, same layout as OrderingReport::excess.
std::array<std::array<double, NonlinearParams::size>, 4> ordering_jacobian(
    const NonlinearParams& params, double fs);

}  // namespace vpecg
