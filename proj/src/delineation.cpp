#include "vpecg/delineation.h"

#include "vpecg/dictionary.h"
#include "vpecg/errors.h"

#include <algorithm>
#include <cmath>

namespace vpecg {

DelineationThresholds default_thresholds(WaveKind wave) {
    switch (wave) {
        case WaveKind::qrs: return {20.0, 0.05, 0.07};
        case WaveKind::p:
        case WaveKind::t: return {2.0, 0.25, 0.4};
    }
    return {};
}

const WaveFiducials& Delineation::operator[](WaveKind w) const {
    switch (w) {
        case WaveKind::qrs: return qrs;
        case WaveKind::t: return t;
        case WaveKind::p: return p;
    }
    return qrs;
}

WaveFiducials& Delineation::operator[](WaveKind w) {
    return const_cast<WaveFiducials&>(std::as_const(*this)[w]);
}

namespace {

bool is_local_max(std::span<const double> d, std::size_t i) {
    return d[i] > d[i - 1] && d[i] >= d[i + 1];
}

bool is_local_min(std::span<const double> d, std::size_t i) {
    return d[i] < d[i - 1] && d[i] <= d[i + 1];
}

Eigen::Index nearest_index(std::span<const double> grid, double t) {
    auto it = std::lower_bound(grid.begin(), grid.end(), t);
    if (it == grid.begin()) return 0;
    if (it == grid.end()) return static_cast<Eigen::Index>(grid.size()) - 1;
    const auto hi = it - grid.begin();
    return (t - grid[hi - 1] <= grid[hi] - t) ? hi - 1 : hi;
}

}  // namespace

std::vector<Extremum> significant_extrema(std::span<const double> deriv,
                                          std::span<const double> grid, double divisor) {
    std::vector<Extremum> out;
    if (deriv.size() >= 3) {
        const auto [mn, mx] = std::minmax_element(deriv.begin(), deriv.end());
        const double max_th = *mx / divisor;
        const double min_th = *mn / divisor;
        for (std::size_t i = 1; i + 1 < deriv.size(); ++i) {
            if (deriv[i] > 0.0 && deriv[i] >= max_th && is_local_max(deriv, i)) {
                out.push_back({static_cast<Eigen::Index>(i), grid[i], deriv[i], +1});
            } else if (deriv[i] < 0.0 && deriv[i] <= min_th && is_local_min(deriv, i)) {
                out.push_back({static_cast<Eigen::Index>(i), grid[i], deriv[i], -1});
            }
        }
    }
    if (out.empty()) throw NoSignificantExtrema("derivative has no significant extrema");
    return out;
}

WaveBounds locate_bounds(std::span<const double> deriv, std::span<const double> grid,
                         const DelineationThresholds& th, double tau, double lambda) {
    const auto extrema = significant_extrema(deriv, grid, th.divisor);
    const auto n = deriv.size();
    WaveBounds out;

    {
        const auto first = static_cast<std::size_t>(extrema.front().index);
        const double v = deriv[first];
        const double limit = th.k_on * std::abs(v);
        std::optional<std::size_t> below;
        std::optional<std::size_t> turn;
        for (std::size_t i = first; i-- > 0;) {
            if (std::abs(deriv[i]) < limit) { below = i; break; }
        }
        for (std::size_t i = first; i-- > 1;) {
            if ((v > 0.0 && is_local_min(deriv, i)) || (v < 0.0 && is_local_max(deriv, i))) {
                turn = i;
                break;
            }
        }
        if (below || turn) {
            out.onset = static_cast<Eigen::Index>(std::max(below.value_or(0), turn.value_or(0)));
        } else {
            out.onset = nearest_index(grid, tau - 3.0 / lambda);
            out.onset_fallback = true;
        }
    }
    {
        const auto last = static_cast<std::size_t>(extrema.back().index);
        const double v = deriv[last];
        const double limit = th.k_end * std::abs(v);
        std::optional<std::size_t> below;
        std::optional<std::size_t> turn;
        for (std::size_t i = last + 1; i < n; ++i) {
            if (std::abs(deriv[i]) < limit) { below = i; break; }
        }
        for (std::size_t i = last + 1; i + 1 < n; ++i) {
            if ((v > 0.0 && is_local_min(deriv, i)) || (v < 0.0 && is_local_max(deriv, i))) {
                turn = i;
                break;
            }
        }
        if (below || turn) {
            out.end = static_cast<Eigen::Index>(std::min(below.value_or(n - 1), turn.value_or(n - 1)));
        } else {
            out.end = nearest_index(grid, tau + 3.0 / lambda);
            out.end_fallback = true;
        }
    }
    return out;
}

WaveFiducials delineate_component(std::span<const double> component, std::span<const double> deriv,
                                  std::span<const double> grid, const DelineationThresholds& th,
                                  double tau, double lambda) {
    WaveFiducials out;
    if (component.empty()) return out;
    WaveBounds bounds;
    try {
        bounds = locate_bounds(deriv, grid, th, tau, lambda);
    } catch (const NoSignificantExtrema&) {
        return out;
    }
    std::size_t peak = 0;
    for (std::size_t i = 1; i < component.size(); ++i) {
        if (std::abs(component[i]) > std::abs(component[peak])) peak = i;
    }
    out.onset = grid[static_cast<std::size_t>(bounds.onset)];
    out.peak = grid[peak];
    out.end = grid[static_cast<std::size_t>(bounds.end)];
    if (bounds.onset_fallback) out.flags |= kOnsetFallback;
    if (bounds.end_fallback) out.flags |= kEndFallback;
    if (!(*out.onset < *out.peak && *out.peak < *out.end)) {
        const auto flags = out.flags | kDroppedOrdering;
        out = WaveFiducials{};
        out.flags = flags;
    }
    return out;
}

Vector component_derivative(const ModelFit& fit, const BeatSignal& beat, WaveKind wave) {
    using Map = ColumnMap;
    const std::span<const double> grid(beat.time.data(), static_cast<std::size_t>(beat.size()));
    const auto cfg = default_wave_config(wave, beat.window_start());
    const Matrix d = build_wave_time_derivs(cfg, fit.params.lambda(wave), fit.params.tau(wave), grid);
    const double cs = fit.coeffs[Map::sigmoid];
    switch (wave) {
        case WaveKind::qrs:
            return d.leftCols(Map::qrs_count) * fit.coeffs.segment(Map::qrs_begin, Map::qrs_count) +
                   cs * d.col(Map::qrs_count);
        case WaveKind::t:
            return d.leftCols(Map::t_count) * fit.coeffs.segment(Map::t_begin, Map::t_count) -
                   cs * d.col(Map::t_count);
        case WaveKind::p:
            return d * fit.coeffs.segment(Map::p_begin, Map::p_count);
    }
    return {};
}

void enforce_ordering(Delineation& d) {
    auto drop = [](WaveFiducials& w) {
        const auto flags = w.flags | kDroppedOrdering;
        w = WaveFiducials{};
        w.flags = flags;
    };
    if (d.p.present() && d.qrs.present() && *d.p.end > *d.qrs.onset) drop(d.p);
    if (d.t.present() && d.qrs.present() && *d.qrs.end > *d.t.onset) drop(d.t);
}

Delineation delineate(const ModelFit& fit, const BeatSignal& beat) {
    const std::span<const double> grid(beat.time.data(), static_cast<std::size_t>(beat.size()));
    Delineation out;
    for (WaveKind w : {WaveKind::p, WaveKind::qrs, WaveKind::t}) {
        const Vector deriv = component_derivative(fit, beat, w);
        const Vector& comp = fit.component(w);
        out[w] = delineate_component({comp.data(), static_cast<std::size_t>(comp.size())},
                                     {deriv.data(), static_cast<std::size_t>(deriv.size())}, grid,
                                     default_thresholds(w), fit.params.tau(w), fit.params.lambda(w));
    }
    enforce_ordering(out);
    return out;
}

}  // namespace vpecg
