#pragma once

#include "vpecg/types.h"

#include <array>
#include <span>

namespace vpecg {

// Four interpolation knots of the per-beat baseline: the window boundaries,
// a point in the PQ segment and a point after the T wave.
struct KnotSet {
    std::array<double, 4> positions{};  // s, R-relative, strictly increasing
    std::array<double, 4> values{};     // mV
};

/// x2 = tau_qrs - 4/lambda_qrs, x3 = tau_t + 4/lambda_t, x1/x4 the first and
/// last grid points. Knot values are the signal at the nearest grid sample.
/// Throws KnotCollision unless x1 < x2 < x3 < x4.
KnotSet compute_knots(const NonlinearParams& params, std::span<const double> grid,
                      std::span<const double> signal);

/// Shape-preserving piecewise cubic Hermite interpolant (pchip) of the knots.
class Pchip {
public:
    explicit Pchip(const KnotSet& knots);

    double operator()(double t) const;
    double derivative(double t) const;

    const std::array<double, 4>& slopes() const noexcept { return slopes_; }

private:
    std::size_t segment(double t) const;

    KnotSet knots_;
    std::array<double, 4> slopes_{};
};

Vector pchip_column(const KnotSet& knots, std::span<const double> grid);

/// Baseline column p(alpha; .) for the given parameters and beat.
Vector baseline_column(const NonlinearParams& params, std::span<const double> grid,
                       std::span<const double> signal);

// Columns: d p / d (lambda_qrs, tau_qrs, lambda_t, tau_t), by central
// differences with step 1e-5 * max(1, |param|).
Matrix baseline_jacobian(const NonlinearParams& params, std::span<const double> grid,
                         std::span<const double> signal);

}  // namespace vpecg
