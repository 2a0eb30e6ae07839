#include "vpecg/baseline.h"

#include "vpecg/errors.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vpecg {

namespace {

std::size_t nearest_index(std::span<const double> grid, double x) {
    auto it = std::lower_bound(grid.begin(), grid.end(), x);
    if (it == grid.begin()) return 0;
    if (it == grid.end()) return grid.size() - 1;
    const auto hi = static_cast<std::size_t>(it - grid.begin());
    return (x - grid[hi - 1] <= grid[hi] - x) ? hi - 1 : hi;
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// One-sided three-point slope at an end knot, limited so the interpolant stays
// shape preserving on the end interval.
double end_slope(double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (sign(s) != sign(d0)) {
        s = 0.0;
    } else if (sign(d0) != sign(d1) && std::abs(s) > std::abs(3.0 * d0)) {
        s = 3.0 * d0;
    }
    return s;
}

}  // namespace

KnotSet compute_knots(const NonlinearParams& params, std::span<const double> grid,
                      std::span<const double> signal) {
    if (grid.size() < 2 || grid.size() != signal.size()) {
        throw KnotCollision("baseline knots need a grid of at least two samples matching the signal");
    }
    KnotSet knots;
    knots.positions = {grid.front(), params.tau_qrs - 4.0 / params.lambda_qrs,
                       params.tau_t + 4.0 / params.lambda_t, grid.back()};
    for (std::size_t k = 0; k + 1 < knots.positions.size(); ++k) {
        if (!(knots.positions[k] < knots.positions[k + 1])) {
            std::ostringstream os;
            os << "baseline knots not strictly increasing: " << knots.positions[0] << ", "
               << knots.positions[1] << ", " << knots.positions[2] << ", " << knots.positions[3];
            throw KnotCollision(os.str());
        }
    }
    for (std::size_t k = 0; k < knots.positions.size(); ++k) {
        knots.values[k] = signal[nearest_index(grid, knots.positions[k])];
    }
    return knots;
}

Pchip::Pchip(const KnotSet& knots) : knots_(knots) {
    const auto& x = knots_.positions;
    const auto& y = knots_.values;
    std::array<double, 3> h{};
    std::array<double, 3> delta{};
    for (std::size_t k = 0; k < 3; ++k) {
        h[k] = x[k + 1] - x[k];
        delta[k] = (y[k + 1] - y[k]) / h[k];
    }
    for (std::size_t k = 1; k < 3; ++k) {
        if (sign(delta[k - 1]) * sign(delta[k]) > 0) {
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            slopes_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        } else {
            slopes_[k] = 0.0;
        }
    }
    slopes_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    slopes_[3] = end_slope(h[2], h[1], delta[2], delta[1]);
}

std::size_t Pchip::segment(double t) const {
    const auto& x = knots_.positions;
    if (t < x[1]) return 0;
    if (t < x[2]) return 1;
    return 2;
}

double Pchip::operator()(double t) const {
    const std::size_t k = segment(t);
    const double h = knots_.positions[k + 1] - knots_.positions[k];
    const double s = (t - knots_.positions[k]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * knots_.values[k] + h10 * h * slopes_[k] + h01 * knots_.values[k + 1] +
           h11 * h * slopes_[k + 1];
}

double Pchip::derivative(double t) const {
    const std::size_t k = segment(t);
    const double h = knots_.positions[k + 1] - knots_.positions[k];
    const double s = (t - knots_.positions[k]) / h;
    const double s2 = s * s;
    const double d00 = (6.0 * s2 - 6.0 * s) / h;
    const double d10 = 3.0 * s2 - 4.0 * s + 1.0;
    const double d01 = (-6.0 * s2 + 6.0 * s) / h;
    const double d11 = 3.0 * s2 - 2.0 * s;
    return d00 * knots_.values[k] + d10 * slopes_[k] + d01 * knots_.values[k + 1] +
           d11 * slopes_[k + 1];
}

Vector pchip_column(const KnotSet& knots, std::span<const double> grid) {
    const Pchip interp(knots);
    Vector out(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t n = 0; n < grid.size(); ++n) out[static_cast<Eigen::Index>(n)] = interp(grid[n]);
    return out;
}

Vector baseline_column(const NonlinearParams& params, std::span<const double> grid,
                       std::span<const double> signal) {
    return pchip_column(compute_knots(params, grid, signal), grid);
}

Matrix baseline_jacobian(const NonlinearParams& params, std::span<const double> grid,
                         std::span<const double> signal) {
    static constexpr std::array<std::size_t, 4> kParams = {kLambdaQrs, kTauQrs, kLambdaT, kTauT};
    Matrix jac(static_cast<Eigen::Index>(grid.size()), 4);
    const auto base = params.to_array();
    for (std::size_t col = 0; col < kParams.size(); ++col) {
        const std::size_t k = kParams[col];
        const double step = 1e-5 * std::max(1.0, std::abs(base[k]));
        auto plus = base;
        auto minus = base;
        plus[k] += step;
        minus[k] -= step;
        const Vector hi = baseline_column(NonlinearParams::from_array(plus), grid, signal);
        const Vector lo = baseline_column(NonlinearParams::from_array(minus), grid, signal);
        jac.col(static_cast<Eigen::Index>(col)) = (hi - lo) / (plus[k] - minus[k]);
    }
    return jac;
}

}  // namespace vpecg
