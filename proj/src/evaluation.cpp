#include "vpecg/evaluation.h"

#include "vpecg/errors.h"

#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

namespace vpecg {

namespace {

void require_same_size(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DegenerateInput("inputs differ in length");
    if (a.empty()) throw EmptyInput("empty input");
}

double mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double centered_energy(std::span<const double> x) {
    const double m = mean(x);
    double e = 0.0;
    for (double v : x) e += (v - m) * (v - m);
    return e;
}

double diff_energy(std::span<const double> a, std::span<const double> b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e += (a[i] - b[i]) * (a[i] - b[i]);
    return e;
}

}  // namespace

double prd(std::span<const double> f, std::span<const double> fhat) {
    require_same_size(f, fhat);
    const double num = diff_energy(f, fhat);
    const double den = centered_energy(f);
    if (num == 0.0) return 0.0;
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return 100.0 * std::sqrt(num / den);
}

double snr_improvement(std::span<const double> clean, std::span<const double> noisy,
                       std::span<const double> denoised) {
    require_same_size(clean, noisy);
    require_same_size(clean, denoised);
    const double out_err = diff_energy(denoised, clean);
    const double in_err = diff_energy(noisy, clean);
    if (out_err == 0.0) return std::numeric_limits<double>::infinity();
    if (in_err == 0.0) return -std::numeric_limits<double>::infinity();
    // The clean energy cancels in the difference of the two SNRs.
    return 10.0 * std::log10(in_err / out_err);
}

double correlation(std::span<const double> x, std::span<const double> xhat) {
    require_same_size(x, xhat);
    const double mx = mean(x);
    const double my = mean(xhat);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = xhat[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("correlation of a constant signal");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double l_operator(std::span<const double> x, std::span<const double> xhat) {
    require_same_size(x, xhat);
    double ex = 0.0, ey = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ex += x[i] * x[i];
        ey += xhat[i] * xhat[i];
    }
    if (ex + ey == 0.0) throw DegenerateInput("l_operator of two zero signals");
    return 1.0 - diff_energy(x, xhat) / (ex + ey);
}

double kp(std::span<const Vector> leads, Eigen::Index begin, Eigen::Index end) {
    if (leads.empty()) throw EmptyInput("kp needs at least one lead");
    Eigen::Index n = leads.front().size();
    for (const auto& l : leads) n = std::min(n, l.size());
    begin = std::max<Eigen::Index>(begin, 0);
    end = std::min(end, n);
    if (begin >= end) throw EmptyWindow("ST window contains no samples");
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = begin; i < end; ++i) {
        double env = 0.0;
        for (const auto& l : leads) env = std::max(env, std::abs(l[i]));
        best = std::min(best, env);
    }
    return best;
}

std::string_view to_string(FiducialKind kind) {
    switch (kind) {
        case FiducialKind::p_on: return "P_on";
        case FiducialKind::p_peak: return "P_peak";
        case FiducialKind::p_end: return "P_end";
        case FiducialKind::qrs_on: return "QRS_on";
        case FiducialKind::qrs_peak: return "QRS_peak";
        case FiducialKind::qrs_end: return "QRS_end";
        case FiducialKind::t_on: return "T_on";
        case FiducialKind::t_peak: return "T_peak";
        case FiducialKind::t_end: return "T_end";
    }
    return "?";
}

WaveKind wave_of(FiducialKind kind) {
    const auto k = static_cast<int>(kind);
    if (k < 3) return WaveKind::p;
    if (k < 6) return WaveKind::qrs;
    return WaveKind::t;
}

std::optional<double> fiducial_time(const Delineation& d, FiducialKind kind) {
    const auto& w = d[wave_of(kind)];
    switch (static_cast<int>(kind) % 3) {
        case 0: return w.onset;
        case 1: return w.peak;
        default: return w.end;
    }
}

std::string_view to_string(Group g) {
    switch (g) {
        case Group::I: return "I";
        case Group::II: return "II";
        case Group::III: return "III";
        case Group::IV: return "IV";
    }
    return "?";
}

GroupLimits group_limits(FiducialKind kind) {
    switch (wave_of(kind)) {
        case WaveKind::p: return {25.0, 30.0};
        case WaveKind::qrs: return {15.0, 20.0};
        case WaveKind::t: return {40.0, 50.0};
    }
    return {};
}

Group assign_group(FiducialKind kind, double mu_ms, double sigma_ms) {
    const auto lim = group_limits(kind);
    const bool mu_below = std::abs(mu_ms) < lim.mu;
    const bool sigma_below = sigma_ms < lim.sigma;
    if (mu_below && sigma_below) return Group::I;
    if (sigma_below) return Group::II;
    if (mu_below) return Group::III;
    return Group::IV;
}

DelineationScore score_delineation(const std::vector<std::vector<AnnotatedBeat>>& channels,
                                   const std::vector<AnnotatedBeat>& truth, double fs,
                                   double match_tolerance_s) {
    if (fs <= 0.0) throw DegenerateInput("sampling rate must be positive");
    const auto tolerance = static_cast<std::int64_t>(std::llround(match_tolerance_s * fs));

    std::array<std::vector<double>, kNumFiducialKinds> errors;
    std::array<int, kNumFiducialKinds> annotated{};
    DelineationScore score;

    for (const auto& ref : truth) {
        std::vector<const AnnotatedBeat*> matches;
        for (const auto& channel : channels) {
            const AnnotatedBeat* best = nullptr;
            std::int64_t best_dist = tolerance + 1;
            for (const auto& b : channel) {
                const auto dist = std::abs(b.r_sample - ref.r_sample);
                if (dist < best_dist) {
                    best = &b;
                    best_dist = dist;
                }
            }
            if (best) matches.push_back(best);
        }
        if (matches.empty()) continue;
        ++score.matched_beats;

        const double ref_r = static_cast<double>(ref.r_sample) / fs;
        for (std::size_t k = 0; k < kNumFiducialKinds; ++k) {
            const auto kind = static_cast<FiducialKind>(k);
            const auto t_ref = fiducial_time(ref.fiducials, kind);
            if (!t_ref) continue;
            ++annotated[k];
            std::optional<double> chosen;
            for (const auto* m : matches) {
                const auto t = fiducial_time(m->fiducials, kind);
                if (!t) continue;
                const double e =
                    1e3 * ((static_cast<double>(m->r_sample) / fs + *t) - (ref_r + *t_ref));
                if (!chosen || std::abs(e) < std::abs(*chosen)) chosen = e;
            }
            if (chosen) errors[k].push_back(*chosen);
        }
    }
    if (score.matched_beats == 0) throw NoMatchingBeats("no truth beat matches any detected beat");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < kNumFiducialKinds; ++k) {
        auto& s = score.kinds[k];
        s.kind = static_cast<FiducialKind>(k);
        s.annotated = annotated[k];
        s.detected = static_cast<int>(errors[k].size());
        s.se = s.annotated ? 100.0 * s.detected / s.annotated : nan;
        const auto& e = errors[k];
        if (e.empty()) {
            s.mean_ms = nan;
            s.std_ms = nan;
            s.group = Group::IV;
            continue;
        }
        const double m = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
        double ss = 0.0;
        for (double v : e) ss += (v - m) * (v - m);
        s.mean_ms = m;
        s.std_ms = e.size() > 1 ? std::sqrt(ss / static_cast<double>(e.size() - 1)) : 0.0;
        s.group = assign_group(s.kind, s.mean_ms, s.std_ms);
    }
    return score;
}

Vector reference_spline_denoise(std::span<const double> signal, std::span<const std::int64_t> anchors,
                                Eigen::Index half_window) {
    const auto n = static_cast<std::int64_t>(signal.size());
    std::vector<double> xs;
    std::vector<double> ys;
    for (auto a : anchors) {
        if (a < 0 || a >= n) continue;
        const auto lo = std::max<std::int64_t>(0, a - half_window);
        const auto hi = std::min<std::int64_t>(n - 1, a + half_window);
        double sum = 0.0;
        for (auto i = lo; i <= hi; ++i) sum += signal[static_cast<std::size_t>(i)];
        const double x = static_cast<double>(a);
        if (!xs.empty() && x <= xs.back()) continue;
        xs.push_back(x);
        ys.push_back(sum / static_cast<double>(hi - lo + 1));
    }
    if (xs.size() < 2) throw TooFewAnchors("spline baseline needs at least two anchors");

    Vector out(n);
    const gsl_interp_type* type = xs.size() >= 3 ? gsl_interp_cspline : gsl_interp_linear;
    std::unique_ptr<gsl_spline, decltype(&gsl_spline_free)> spline(gsl_spline_alloc(type, xs.size()),
                                                                   &gsl_spline_free);
    std::unique_ptr<gsl_interp_accel, decltype(&gsl_interp_accel_free)> acc(gsl_interp_accel_alloc(),
                                                                            &gsl_interp_accel_free);
    if (!spline || !acc) throw std::bad_alloc();
    gsl_spline_init(spline.get(), xs.data(), ys.data(), xs.size());

    const double x0 = xs.front();
    const double x1 = xs.back();
    const double d0 = gsl_spline_eval_deriv(spline.get(), x0, acc.get());
    const double d1 = gsl_spline_eval_deriv(spline.get(), x1, acc.get());
    for (std::int64_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i);
        double b;
        if (x < x0) b = ys.front() + d0 * (x - x0);
        else if (x > x1) b = ys.back() + d1 * (x - x1);
        else b = gsl_spline_eval(spline.get(), x, acc.get());
        out[i] = signal[static_cast<std::size_t>(i)] - b;
    }
    return out;
}

std::vector<std::int64_t> pq_anchors(std::span<const std::int64_t> r_peaks, double fs,
                                     double offset_s) {
    const auto off = static_cast<std::int64_t>(std::llround(offset_s * fs));
    std::vector<std::int64_t> out;
    out.reserve(r_peaks.size());
    for (auto r : r_peaks) out.push_back(r - off);
    return out;
}

}  // namespace vpecg
