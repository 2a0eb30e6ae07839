#pragma once

#include "vpecg/evaluation.h"
#include "vpecg/types.h"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace vpecg {

// One wave as a sum of rescaled Hermite atoms at a common (lambda, tau).
struct WaveTemplate {
    double lambda = 0.0;
    double tau = 0.0;
    std::vector<double> coeffs;  // mV, by Hermite order
};

enum class QrsShape { hermite, piecewise_linear };

struct BeatTemplate {
    WaveTemplate qrs;
    WaveTemplate t;
    WaveTemplate p;
    double st_offset = 0.0;  // mV, level between the QRS and T sigmoids
    QrsShape qrs_shape = QrsShape::hermite;
    // (time s, mV) corners used when qrs_shape is piecewise_linear; first and
    // last values are 0. The sigmoid of the ST step still uses qrs.lambda/tau.
    std::vector<std::pair<double, double>> qrs_corners;

    /// Clean beat value at R-relative time t.
    double operator()(double t) const;
};

BeatTemplate model_template();
BeatTemplate nonmodel_template();

/// Reference fiducials of a template. Hermite waves are delineated with the
/// same derivative rule as fitted beats, on a dense grid; piecewise-linear
/// QRS uses its first, largest and last corner.
Delineation template_fiducials(const BeatTemplate& tmpl, double dense_fs = 20000.0);

struct NoiseParams {
    double delta_f = 0.01;  // Hz
    int k = 50;
    std::vector<double> a;      // k + 1 amplitudes in [0, 1]
    std::vector<double> theta;  // k + 1 phases in [0, 2 pi)
    double c = 1.0;

    bool valid() const;
};

NoiseParams random_noise_params(std::mt19937_64& rng, int k = 50, double delta_f = 0.01);

/// n(t) = C sum_k a_k cos(2 pi k delta_f t + theta_k), t = i / fs.
Vector baseline_noise(const NoiseParams& params, Eigen::Index n, double fs);

/// C such that the mean-removed power of clean over the power of C * noise
/// equals target_db. Throws ZeroNoise.
double scale_for_snr(std::span<const double> clean, std::span<const double> noise, double target_db);

struct SynthConfig {
    BeatTemplate tmpl = model_template();
    int n_beats = 100;
    double fs = 500.0;
    double rr_mean = 1.0;
    double rr_std = 0.05;
    std::vector<double> lead_scales{1.0, 0.8, 0.6};
    double snr_db = 0.0;
    std::uint64_t seed = 1;
    int noise_k = 50;
    double noise_delta_f = 0.01;

    void validate() const;  // throws ConfigError
};

struct SynthRecord {
    EcgRecord clean;
    std::vector<AnnotatedBeat> truth;  // one per R peak, lead independent
};

struct NoisyRecord {
    EcgRecord noisy;
    EcgRecord clean;
    std::vector<Vector> baseline;  // per lead, the added noise
    std::vector<AnnotatedBeat> truth;
};

SynthRecord generate_clean(const SynthConfig& cfg);

/// Clean record plus independent baseline noise per lead at cfg.snr_db.
NoisyRecord generate(const SynthConfig& cfg);

}  // namespace vpecg
