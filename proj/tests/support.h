#pragma once

#include "vpecg/dictionary.h"
#include "vpecg/types.h"

#include <cmath>
#include <random>
#include <span>
#include <vector>

namespace testing {

inline std::span<const double> as_span(const vpecg::Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// Relative agreement with an absolute floor for entries near zero.
inline bool close(double a, double b, double rel, double floor) {
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), floor});
}

// A beat grid at fs with the R peak 0.3 s after the window start.
inline vpecg::BeatSignal empty_beat(double fs = 500.0, double pre = 0.3, double post = 0.55) {
    const auto r = static_cast<Eigen::Index>(std::llround(pre * fs));
    const auto n = r + static_cast<Eigen::Index>(std::llround(post * fs)) + 1;
    return vpecg::make_beat(vpecg::Vector::Zero(n), fs, r);
}

// Uniform draw inside the bounds that also satisfies the ordering predicate.
inline vpecg::NonlinearParams random_feasible(std::mt19937_64& rng, const vpecg::ModelBounds& bounds,
                                              const vpecg::BeatSignal& beat, double margin = 0.05) {
    std::uniform_real_distribution<double> u(margin, 1.0 - margin);
    for (;;) {
        std::array<double, vpecg::NonlinearParams::size> a{};
        for (std::size_t k = 0; k < a.size(); ++k) {
            const auto iv = bounds.param_interval(k);
            a[k] = iv.lo + u(rng) * iv.width();
        }
        const auto p = vpecg::NonlinearParams::from_array(a);
        const auto rep = vpecg::check_ordering(p, beat.window_start(), beat.size(), beat.fs);
        // The baseline knots sit at 4/lambda, outside the 3/lambda ordering supports.
        const bool knots_inside = p.tau_qrs - 4.0 / p.lambda_qrs > beat.time[0] &&
                                  p.tau_t + 4.0 / p.lambda_t < beat.time[beat.size() - 1];
        if (rep.feasible && knots_inside) return p;
    }
}

}  // namespace testing
