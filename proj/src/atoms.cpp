#include "vpecg/atoms.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vpecg {

namespace {

constexpr std::array<double, kMaxHermiteOrder + 2> make_rescale_table() {
    std::array<double, kMaxHermiteOrder + 2> table{};
    double p = 1.0;
    for (auto& v : table) {
        v = p;
        p *= kHermiteRescale;
    }
    return table;
}

constexpr auto kRescale = make_rescale_table();

struct RecurrenceTable {
    std::array<double, 16> up{};
    std::array<double, 16> down{};
};

const RecurrenceTable& recurrence_table() {
    static const RecurrenceTable table = [] {
        RecurrenceTable r;
        for (std::size_t j = 0; j < r.up.size(); ++j) {
            const double jd = static_cast<double>(j);
            r.up[j] = std::sqrt(2.0 / (jd + 1.0));
            r.down[j] = std::sqrt(jd / (jd + 1.0));
        }
        return r;
    }();
    return table;
}

}  // namespace

double hermite_rescale(int order) {
    if (order >= 0 && order < static_cast<int>(kRescale.size())) return kRescale[order];
    return std::pow(kHermiteRescale, order);
}

bool AtomSpec::valid() const noexcept {
    if (!(lambda > 0.0) || !std::isfinite(lambda) || !std::isfinite(tau)) return false;
    if (kind == AtomKind::hermite) return order >= 0 && order <= kMaxHermiteOrder;
    return true;
}

double hermite_poly(int order, double t) {
    if (order <= 0) return 1.0;
    double prev = 1.0;
    double cur = 2.0 * t;
    for (int j = 1; j < order; ++j) {
        const double next = 2.0 * t * cur - 2.0 * j * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

void hermite_fns(double t, std::size_t n, double* out) {
    if (n == 0) return;
    // exp underflows to exactly zero here, and so does every order.
    if (0.5 * t * t > 746.0) {
        std::fill(out, out + n, 0.0);
        return;
    }
    const double phi0 = std::exp(-0.5 * t * t) / std::sqrt(std::sqrt(std::numbers::pi));
    out[0] = phi0;
    if (n == 1) return;
    out[1] = std::numbers::sqrt2 * t * phi0;
    const auto& c = recurrence_table();
    const std::size_t tabled = std::min(n, c.up.size());
    std::size_t j = 1;
    for (; j + 1 < tabled; ++j) out[j + 1] = c.up[j] * t * out[j] - c.down[j] * out[j - 1];
    for (; j + 1 < n; ++j) {
        const double jd = static_cast<double>(j);
        out[j + 1] = std::sqrt(2.0 / (jd + 1.0)) * t * out[j] - std::sqrt(jd / (jd + 1.0)) * out[j - 1];
    }
}

double hermite_fn(int order, double t) {
    if (order < 0) return 0.0;
    std::array<double, 64> buf{};
    const auto n = static_cast<std::size_t>(order) + 1;
    if (n > buf.size()) return 0.0;
    hermite_fns(t, n, buf.data());
    return buf[order];
}

double hermite_fn_deriv(int order, double t) {
    if (order < 0) return 0.0;
    std::array<double, 64> buf{};
    const auto n = static_cast<std::size_t>(order) + 2;
    if (n > buf.size()) return 0.0;
    hermite_fns(t, n, buf.data());
    const double j = order;
    const double lower = order > 0 ? std::sqrt(j / 2.0) * buf[order - 1] : 0.0;
    return lower - std::sqrt((j + 1.0) / 2.0) * buf[order + 1];
}

double sigmoid(double x) {
    // Split by sign so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-2.0 * x));
    const double e = std::exp(2.0 * x);
    return e / (1.0 + e);
}

double sigmoid_deriv(double x) {
    const double s = sigmoid(x);
    return 2.0 * s * (1.0 - s);
}

double atom_value(const AtomSpec& spec, double t) {
    const double x = spec.lambda * (t - spec.tau);
    if (spec.kind == AtomKind::sigmoid) return sigmoid(x);
    return hermite_fn(spec.order, hermite_rescale(spec.order) * x);
}

double atom_time_deriv(const AtomSpec& spec, double t) {
    const double x = spec.lambda * (t - spec.tau);
    if (spec.kind == AtomKind::sigmoid) return spec.lambda * sigmoid_deriv(x);
    const double k = hermite_rescale(spec.order);
    return k * spec.lambda * hermite_fn_deriv(spec.order, k * x);
}

AtomDerivs atom_param_derivs(const AtomSpec& spec, double t) {
    const double dt = t - spec.tau;
    const double x = spec.lambda * dt;
    double outer = 0.0;  // d atom / d x, where x = lambda (t - tau)
    if (spec.kind == AtomKind::sigmoid) {
        outer = sigmoid_deriv(x);
    } else {
        const double k = hermite_rescale(spec.order);
        outer = k * hermite_fn_deriv(spec.order, k * x);
    }
    return {outer * dt, -outer * spec.lambda};
}

}  // namespace vpecg
