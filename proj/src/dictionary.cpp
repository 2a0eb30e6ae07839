#include "vpecg/dictionary.h"

#include "vpecg/atoms.h"
#include "vpecg/errors.h"

#include <cmath>
#include <sstream>

namespace vpecg {

bool WaveDictionaryConfig::valid() const noexcept {
    return num_hermite >= 0 && num_hermite <= kMaxHermiteOrder && lambda.lo > 0.0 &&
           lambda.lo <= lambda.hi && tau.lo <= tau.hi;
}

WaveDictionaryConfig default_wave_config(WaveKind wave, double window_start) {
    WaveDictionaryConfig cfg;
    cfg.wave = wave;
    switch (wave) {
        case WaveKind::qrs:
            cfg.num_hermite = 7;
            cfg.has_sigmoid = true;
            cfg.lambda = {44.12, 85.71};
            cfg.tau = {-0.068, 0.068};
            break;
        case WaveKind::t:
            cfg.num_hermite = 4;
            cfg.has_sigmoid = true;
            cfg.lambda = {14.78, 30.61};
            cfg.tau = {0.133, 0.343};
            break;
        case WaveKind::p:
            cfg.num_hermite = 4;
            cfg.has_sigmoid = false;
            cfg.lambda = {39.47, 68.18};
            cfg.tau = {window_start + 0.044, -0.112};
            break;
    }
    return cfg;
}

ModelBounds ModelBounds::defaults(double window_start) {
    return {default_wave_config(WaveKind::qrs, window_start),
            default_wave_config(WaveKind::t, window_start),
            default_wave_config(WaveKind::p, window_start)};
}

const WaveDictionaryConfig& ModelBounds::operator[](WaveKind w) const {
    switch (w) {
        case WaveKind::qrs: return qrs;
        case WaveKind::t: return t;
        case WaveKind::p: return p;
    }
    return qrs;
}

WaveDictionaryConfig& ModelBounds::operator[](WaveKind w) {
    return const_cast<WaveDictionaryConfig&>(std::as_const(*this)[w]);
}

Interval ModelBounds::param_interval(std::size_t index) const {
    static constexpr WaveKind order[] = {WaveKind::qrs, WaveKind::t, WaveKind::p};
    const auto& cfg = (*this)[order[index / 2]];
    return index % 2 == 0 ? cfg.lambda : cfg.tau;
}

bool ModelBounds::contains(const NonlinearParams& params) const {
    const auto a = params.to_array();
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (!param_interval(k).contains(a[k])) return false;
    }
    return true;
}

NonlinearParams ModelBounds::clamp(const NonlinearParams& params) const {
    auto a = params.to_array();
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = param_interval(k).clamp(a[k]);
    return NonlinearParams::from_array(a);
}

NonlinearParams ModelBounds::center() const {
    std::array<double, NonlinearParams::size> a{};
    for (std::size_t k = 0; k < a.size(); ++k) {
        const auto iv = param_interval(k);
        a[k] = 0.5 * (iv.lo + iv.hi);
    }
    return NonlinearParams::from_array(a);
}

namespace {

void require_in_bounds(const WaveDictionaryConfig& cfg, double lambda, double tau) {
    if (!cfg.lambda.contains(lambda) || !cfg.tau.contains(tau)) {
        std::ostringstream os;
        os << to_string(cfg.wave) << " parameters out of bounds: lambda=" << lambda << " in ["
           << cfg.lambda.lo << ", " << cfg.lambda.hi << "], tau=" << tau << " in [" << cfg.tau.lo
           << ", " << cfg.tau.hi << "]";
        throw BoundsViolation(os.str());
    }
}

// Calls fn(row, phi, dphi) with the scaled Hermite values and their argument
// derivatives for each grid point; phi[j] = phi_j(k_j x), dphi[j] = phi_j'(k_j x) k_j.
template <bool WithDerivs, typename Fn>
void for_each_hermite_row(int num_hermite, double lambda, double tau, std::span<const double> grid,
                          Fn&& fn) {
    std::array<double, kMaxHermiteOrder + 2> buf{};
    std::array<double, kMaxHermiteOrder + 1> phi{};
    std::array<double, kMaxHermiteOrder + 1> dphi{};
    std::array<double, kMaxHermiteOrder + 2> half_sqrt{};
    for (std::size_t j = 0; j < half_sqrt.size(); ++j) half_sqrt[j] = std::sqrt(static_cast<double>(j) / 2.0);
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double x = lambda * (grid[n] - tau);
        for (int j = 0; j < num_hermite; ++j) {
            const double k = hermite_rescale(j);
            hermite_fns(k * x, static_cast<std::size_t>(j) + (WithDerivs ? 2 : 1), buf.data());
            phi[j] = buf[j];
            if constexpr (WithDerivs) {
                const double lower = j > 0 ? half_sqrt[j] * buf[j - 1] : 0.0;
                dphi[j] = k * (lower - half_sqrt[j + 1] * buf[j + 1]);
            }
        }
        fn(static_cast<Eigen::Index>(n), x, phi, dphi);
    }
}

}  // namespace

Matrix build_wave_columns(const WaveDictionaryConfig& cfg, double lambda, double tau,
                          std::span<const double> grid) {
    require_in_bounds(cfg, lambda, tau);
    Matrix out(static_cast<Eigen::Index>(grid.size()), cfg.num_columns());
    for_each_hermite_row<false>(cfg.num_hermite, lambda, tau, grid,
                         [&](Eigen::Index n, double x, const auto& phi, const auto&) {
                             for (int j = 0; j < cfg.num_hermite; ++j) out(n, j) = phi[j];
                             if (cfg.has_sigmoid) out(n, cfg.num_hermite) = sigmoid(x);
                         });
    return out;
}

WaveJacobian build_wave_jacobian(const WaveDictionaryConfig& cfg, double lambda, double tau,
                                 std::span<const double> grid) {
    require_in_bounds(cfg, lambda, tau);
    const auto rows = static_cast<Eigen::Index>(grid.size());
    WaveJacobian jac{Matrix(rows, cfg.num_columns()), Matrix(rows, cfg.num_columns())};
    for_each_hermite_row<true>(cfg.num_hermite, lambda, tau, grid,
                         [&](Eigen::Index n, double x, const auto&, const auto& dphi) {
                             const double dt = grid[n] - tau;
                             for (int j = 0; j < cfg.num_hermite; ++j) {
                                 jac.d_dlambda(n, j) = dphi[j] * dt;
                                 jac.d_dtau(n, j) = -dphi[j] * lambda;
                             }
                             if (cfg.has_sigmoid) {
                                 const double ds = sigmoid_deriv(x);
                                 jac.d_dlambda(n, cfg.num_hermite) = ds * dt;
                                 jac.d_dtau(n, cfg.num_hermite) = -ds * lambda;
                             }
                         });
    return jac;
}

Matrix build_wave_time_derivs(const WaveDictionaryConfig& cfg, double lambda, double tau,
                              std::span<const double> grid) {
    Matrix out(static_cast<Eigen::Index>(grid.size()), cfg.num_columns());
    for_each_hermite_row<true>(cfg.num_hermite, lambda, tau, grid,
                         [&](Eigen::Index n, double x, const auto&, const auto& dphi) {
                             for (int j = 0; j < cfg.num_hermite; ++j) out(n, j) = dphi[j] * lambda;
                             if (cfg.has_sigmoid) out(n, cfg.num_hermite) = lambda * sigmoid_deriv(x);
                         });
    return out;
}

OrderingReport check_ordering(const NonlinearParams& params, double window_start,
                              Eigen::Index n_samples, double fs) {
    auto sample = [&](double t) { return (t - window_start) * fs + 1.0; };
    const double p_on = sample(params.tau_p - 3.0 / params.lambda_p);
    const double p_end = sample(params.tau_p + 3.0 / params.lambda_p);
    const double qrs_on = sample(params.tau_qrs - 3.0 / params.lambda_qrs);
    const double qrs_end = sample(params.tau_qrs + 3.0 / params.lambda_qrs);
    const double t_on = sample(params.tau_t - 3.0 / params.lambda_t);
    const double t_end = sample(params.tau_t + 3.0 / params.lambda_t);

    OrderingReport report;
    report.excess = {1.0 - p_on, p_end - qrs_on, qrs_end - t_on,
                     t_end - static_cast<double>(n_samples)};
    for (double e : report.excess) {
        if (e > 0.0) report.feasible = false;
    }
    return report;
}

std::array<std::array<double, NonlinearParams::size>, 4> ordering_jacobian(
    const NonlinearParams& params, double fs) {
    // d(3/lambda)/d lambda = -3/lambda^2
    const double dq = -3.0 / (params.lambda_qrs * params.lambda_qrs) * fs;
    const double dt = -3.0 / (params.lambda_t * params.lambda_t) * fs;
    const double dp = -3.0 / (params.lambda_p * params.lambda_p) * fs;
    std::array<std::array<double, NonlinearParams::size>, 4> jac{};
    // 1 - sample(tau_p - 3/lambda_p)
    jac[0][kTauP] = -fs;
    jac[0][kLambdaP] = dp;
    // sample(tau_p + 3/lambda_p) - sample(tau_qrs - 3/lambda_qrs)
    jac[1][kTauP] = fs;
    jac[1][kLambdaP] = dp;
    jac[1][kTauQrs] = -fs;
    jac[1][kLambdaQrs] = dq;
    // sample(tau_qrs + 3/lambda_qrs) - sample(tau_t - 3/lambda_t)
    jac[2][kTauQrs] = fs;
    jac[2][kLambdaQrs] = dq;
    jac[2][kTauT] = -fs;
    jac[2][kLambdaT] = dt;
    // sample(tau_t + 3/lambda_t) - N
    jac[3][kTauT] = fs;
    jac[3][kLambdaT] = dt;
    return jac;
}

}  // namespace vpecg
