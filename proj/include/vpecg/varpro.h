#pragma once

#include "vpecg/dictionary.h"
#include "vpecg/types.h"

#include <array>

namespace vpecg {

struct ModelOptions {
    // Include the pchip baseline column. The mean-beat gating fit runs without it.
    bool include_baseline = true;
    // Keep the coefficient of the first P Hermite atom (a Gaussian) non-negative.
    bool p_wave_nonnegative = true;
};

// Column layout of the assembled dictionary:
//   [QRS hermite 0..6 | T hermite 0..3 | P hermite 0..3 | s_QRS - s_T | baseline]
// The QRS and T sigmoids share one coefficient with opposite signs, which is
// encoded by the single merged column.
struct ColumnMap {
    static constexpr Eigen::Index qrs_begin = 0;
    static constexpr Eigen::Index qrs_count = 7;
    static constexpr Eigen::Index t_begin = 7;
    static constexpr Eigen::Index t_count = 4;
    static constexpr Eigen::Index p_begin = 11;
    static constexpr Eigen::Index p_count = 4;
    static constexpr Eigen::Index sigmoid = 15;
    static constexpr Eigen::Index baseline = 16;
    static constexpr Eigen::Index p_gauss_col = p_begin;
    static constexpr Eigen::Index full_columns = 17;

    bool has_baseline = true;
    Eigen::Index columns() const { return has_baseline ? full_columns : full_columns - 1; }
};

struct AssembledSystem {
    Matrix phi;                                   // N x J
    std::array<Matrix, NonlinearParams::size> dphi;  // d phi / d alpha_k, each N x J
    ColumnMap map;
    Vector sigmoid_qrs;  // the two halves of the merged sigmoid column
    Vector sigmoid_t;
};

AssembledSystem assemble(const NonlinearParams& params, const BeatSignal& beat,
                         const ModelBounds& bounds, const ModelOptions& opts = {});

struct CoeffSolution {
    Vector coeffs;
    Eigen::Index rank = 0;
    bool rank_deficient = false;
    bool constraint_active = false;  // the P-Gaussian coefficient was pinned at 0
};

/// Least squares min ||f - phi c|| subject to c[p_gauss_col] >= 0 (when
/// enabled). Rank deficiency is handled by truncating small pivots of a
/// complete orthogonal decomposition; the minimum-norm solution is returned.
CoeffSolution solve_coeffs(const AssembledSystem& sys, const Vector& f,
                           const ModelOptions& opts = {});

/// Projection residual ||f - phi phi^+ f||^2.
double residual(const NonlinearParams& params, const BeatSignal& beat, const ModelBounds& bounds,
                const ModelOptions& opts = {});

/// Gradient of residual() over (lambda_qrs, tau_qrs, lambda_t, tau_t, lambda_p, tau_p):
/// d r2 / d alpha_k = -2 r^T (d phi / d alpha_k) c.
std::array<double, NonlinearParams::size> gradient(const NonlinearParams& params,
                                                   const BeatSignal& beat,
                                                   const ModelBounds& bounds,
                                                   const ModelOptions& opts = {});

struct ModelFit {
    NonlinearParams params;
    Vector coeffs;          // 17 entries (16 without baseline), mV
    double residual_sq = 0.0;
    Vector qrs;             // per-component reconstructions on the beat grid
    Vector t;
    Vector p;
    Vector baseline;
    int iterations = 0;
    bool converged = false;
    bool rank_deficient = false;

    Vector reconstruction() const { return qrs + t + p + baseline; }
    const Vector& component(WaveKind w) const;
};

/// Evaluates the model at fixed parameters: solves for the coefficients and
/// splits the reconstruction into its components.
ModelFit evaluate_model(const NonlinearParams& params, const BeatSignal& beat,
                        const ModelBounds& bounds, const ModelOptions& opts = {});

/// Splits coeffs into components given an already assembled system.
void split_components(const AssembledSystem& sys, const Vector& coeffs, ModelFit& fit);

struct OptimizerConfig {
    int max_iters = 200;
    double step_tol = 1e-8;          // on the step in bound-normalized coordinates
    double obj_tol = 1e-10;          // relative decrease of the penalized objective
    double penalty_scale = 1e3;      // mu = penalty_scale * ||f||^2 / N
    double initial_radius = 0.1;     // in bound-normalized coordinates
};

// Penalized objective r2 + mu * sum max(0, excess_i)^2.
double penalized_objective(const NonlinearParams& params, const BeatSignal& beat,
                           const ModelBounds& bounds, const OptimizerConfig& cfg,
                           const ModelOptions& opts = {});

double penalty_weight(const BeatSignal& beat, const OptimizerConfig& cfg);

/// Bound-constrained trust-region Gauss-Newton on the penalized variable
/// projection functional. Throws InfeasibleInit when init is outside bounds.
/// Never throws for non-convergence: the best iterate is returned with
/// converged = false.
ModelFit fit(const BeatSignal& beat, const NonlinearParams& init, const ModelBounds& bounds,
             const OptimizerConfig& cfg = {}, const ModelOptions& opts = {});

}  // namespace vpecg
