#include "vpecg/synth.h"

#include "vpecg/atoms.h"
#include "vpecg/errors.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace vpecg {

namespace {

double hermite_sum(const WaveTemplate& w, double x) {
    double v = 0.0;
    for (std::size_t j = 0; j < w.coeffs.size(); ++j) {
        v += w.coeffs[j] * atom_value({AtomKind::hermite, static_cast<int>(j), w.lambda, w.tau}, x);
    }
    return v;
}

double hermite_sum_deriv(const WaveTemplate& w, double x) {
    double v = 0.0;
    for (std::size_t j = 0; j < w.coeffs.size(); ++j) {
        v += w.coeffs[j] *
             atom_time_deriv({AtomKind::hermite, static_cast<int>(j), w.lambda, w.tau}, x);
    }
    return v;
}

double step(const WaveTemplate& w, double x) {
    return atom_value({AtomKind::sigmoid, 0, w.lambda, w.tau}, x);
}

double step_deriv(const WaveTemplate& w, double x) {
    return atom_time_deriv({AtomKind::sigmoid, 0, w.lambda, w.tau}, x);
}

double piecewise_linear(const std::vector<std::pair<double, double>>& pts, double x) {
    if (pts.empty() || x <= pts.front().first || x >= pts.back().first) return 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (x <= pts[i].first) {
            const auto [x0, v0] = pts[i - 1];
            const auto [x1, v1] = pts[i];
            return v0 + (v1 - v0) * (x - x0) / (x1 - x0);
        }
    }
    return 0.0;
}

double mean_removed_power(std::span<const double> x) {
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double p = 0.0;
    for (double v : x) p += (v - m) * (v - m);
    return p / static_cast<double>(x.size());
}

double raw_power(std::span<const double> x) {
    double p = 0.0;
    for (double v : x) p += v * v;
    return p / static_cast<double>(x.size());
}

WaveFiducials dense_fiducials(const std::vector<double>& grid, const std::vector<double>& comp,
                              const std::vector<double>& deriv, WaveKind wave, const WaveTemplate& w) {
    return delineate_component(comp, deriv, grid, default_thresholds(wave), w.tau, w.lambda);
}

}  // namespace

double BeatTemplate::operator()(double x) const {
    double v = qrs_shape == QrsShape::hermite ? hermite_sum(qrs, x) : piecewise_linear(qrs_corners, x);
    v += hermite_sum(t, x) + hermite_sum(p, x);
    v += st_offset * (step(qrs, x) - step(t, x));
    return v;
}

BeatTemplate model_template() {
    BeatTemplate b;
    b.qrs = {60.0, 0.0, {1.0, 0.08, -0.45, -0.05, 0.06}};
    b.t = {20.0, 0.28, {0.40, -0.06, 0.03}};
    b.p = {50.0, -0.19, {0.22, 0.02}};
    b.st_offset = 0.1;
    return b;
}

BeatTemplate nonmodel_template() {
    BeatTemplate b = model_template();
    b.qrs_shape = QrsShape::piecewise_linear;
    b.qrs_corners = {{-0.045, 0.0}, {-0.030, -0.10}, {0.0, 1.20}, {0.025, -0.25}, {0.045, 0.0}};
    b.st_offset = -0.05;
    return b;
}

Delineation template_fiducials(const BeatTemplate& tmpl, double dense_fs) {
    const double lo = -0.5;
    const double hi = 0.9;
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) * dense_fs)) + 1;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = lo + static_cast<double>(i) / dense_fs;

    std::vector<double> comp(n);
    std::vector<double> deriv(n);
    Delineation out;

    if (tmpl.qrs_shape == QrsShape::hermite) {
        for (std::size_t i = 0; i < n; ++i) {
            comp[i] = hermite_sum(tmpl.qrs, grid[i]) + tmpl.st_offset * step(tmpl.qrs, grid[i]);
            deriv[i] = hermite_sum_deriv(tmpl.qrs, grid[i]) + tmpl.st_offset * step_deriv(tmpl.qrs, grid[i]);
        }
        out.qrs = dense_fiducials(grid, comp, deriv, WaveKind::qrs, tmpl.qrs);
    } else {
        const auto& c = tmpl.qrs_corners;
        auto peak = std::max_element(c.begin(), c.end(), [](const auto& a, const auto& b) {
            return std::abs(a.second) < std::abs(b.second);
        });
        out.qrs.onset = c.front().first;
        out.qrs.peak = peak->first;
        out.qrs.end = c.back().first;
    }

    for (std::size_t i = 0; i < n; ++i) {
        comp[i] = hermite_sum(tmpl.t, grid[i]) - tmpl.st_offset * step(tmpl.t, grid[i]);
        deriv[i] = hermite_sum_deriv(tmpl.t, grid[i]) - tmpl.st_offset * step_deriv(tmpl.t, grid[i]);
    }
    out.t = dense_fiducials(grid, comp, deriv, WaveKind::t, tmpl.t);

    for (std::size_t i = 0; i < n; ++i) {
        comp[i] = hermite_sum(tmpl.p, grid[i]);
        deriv[i] = hermite_sum_deriv(tmpl.p, grid[i]);
    }
    out.p = dense_fiducials(grid, comp, deriv, WaveKind::p, tmpl.p);
    enforce_ordering(out);
    return out;
}

bool NoiseParams::valid() const {
    const auto terms = static_cast<std::size_t>(k) + 1;
    return k >= 1 && delta_f > 0.0 && a.size() == terms && theta.size() == terms;
}

NoiseParams random_noise_params(std::mt19937_64& rng, int k, double delta_f) {
    NoiseParams p;
    p.k = k;
    p.delta_f = delta_f;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i <= k; ++i) {
        p.a.push_back(unit(rng));
        p.theta.push_back(phase(rng));
    }
    return p;
}

Vector baseline_noise(const NoiseParams& params, Eigen::Index n, double fs) {
    if (!params.valid()) throw ConfigError("invalid noise parameters");
    if (fs <= 0.0) throw ConfigError("sampling rate must be positive");
    Vector out = Vector::Zero(n);
    if (params.c == 0.0) return out;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        double v = 0.0;
        for (int k = 0; k <= params.k; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            v += params.a[kk] * std::cos(2.0 * std::numbers::pi * k * params.delta_f * t + params.theta[kk]);
        }
        out[i] = params.c * v;
    }
    return out;
}

double scale_for_snr(std::span<const double> clean, std::span<const double> noise, double target_db) {
    if (clean.empty() || clean.size() != noise.size()) throw DegenerateInput("length mismatch");
    const double pn = raw_power(noise);
    if (pn == 0.0) throw ZeroNoise("noise has zero power");
    const double ps = mean_removed_power(clean);
    return std::sqrt(ps / (pn * std::pow(10.0, target_db / 10.0)));
}

void SynthConfig::validate() const {
    if (n_beats < 1) throw ConfigError("n_beats must be positive");
    if (!(fs >= 250.0)) throw ConfigError("fs must be at least 250 Hz");
    if (!(rr_std >= 0.0 && rr_mean > 3.0 * rr_std && rr_mean > 0.0)) {
        throw ConfigError("rr_mean must exceed 3 * rr_std >= 0");
    }
    if (lead_scales.empty()) throw ConfigError("at least one lead is required");
    if (noise_k < 1 || !(noise_delta_f > 0.0)) throw ConfigError("invalid noise settings");
}

SynthRecord generate_clean(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> rr(cfg.rr_mean, cfg.rr_std);

    // R peaks: one mean RR of lead-in, then Gaussian intervals, then one of tail.
    std::vector<double> r_times;
    double t = cfg.rr_mean;
    for (int i = 0; i < cfg.n_beats; ++i) {
        r_times.push_back(t);
        t += cfg.rr_std > 0.0 ? rr(rng) : cfg.rr_mean;
    }
    const auto n = static_cast<Eigen::Index>(std::ceil((r_times.back() + cfg.rr_mean) * cfg.fs));

    SynthRecord out;
    out.clean.fs = cfg.fs;
    for (double rt : r_times) out.clean.r_peaks.push_back(std::llround(rt * cfg.fs));

    // The template is evaluated at R-relative times of the integer R sample.
    Vector beat_sum = Vector::Zero(n);
    const double reach = 2.0;
    for (auto r : out.clean.r_peaks) {
        const auto lo = std::max<Eigen::Index>(0, r - static_cast<Eigen::Index>(reach * cfg.fs));
        const auto hi = std::min<Eigen::Index>(n, r + static_cast<Eigen::Index>(reach * cfg.fs) + 1);
        for (Eigen::Index i = lo; i < hi; ++i) {
            beat_sum[i] += cfg.tmpl(static_cast<double>(i - r) / cfg.fs);
        }
    }
    for (double s : cfg.lead_scales) out.clean.leads.push_back(s * beat_sum);

    const Delineation fid = template_fiducials(cfg.tmpl);
    for (auto r : out.clean.r_peaks) out.truth.push_back({r, fid});
    return out;
}

NoisyRecord generate(const SynthConfig& cfg) {
    SynthRecord clean = generate_clean(cfg);
    // Noise draws use a stream separate from the RR stream so that the clean
    // record does not depend on the noise settings.
    std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);

    NoisyRecord out;
    out.noisy.fs = cfg.fs;
    out.noisy.r_peaks = clean.clean.r_peaks;
    const Eigen::Index n = clean.clean.num_samples();
    for (const auto& lead : clean.clean.leads) {
        NoiseParams np = random_noise_params(rng, cfg.noise_k, cfg.noise_delta_f);
        np.c = 1.0;
        const Vector unit = baseline_noise(np, n, cfg.fs);
        const double c = scale_for_snr({lead.data(), static_cast<std::size_t>(n)},
                                       {unit.data(), static_cast<std::size_t>(n)}, cfg.snr_db);
        Vector noise = c * unit;
        out.noisy.leads.push_back(lead + noise);
        out.baseline.push_back(std::move(noise));
    }
    out.clean = std::move(clean.clean);
    out.truth = std::move(clean.truth);
    return out;
}

}  // namespace vpecg
