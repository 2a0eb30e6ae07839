#include "vpecg/varpro.h"

#include "linear_solve.h"
#include "vpecg/baseline.h"
#include "vpecg/errors.h"

#include <span>

namespace vpecg {

namespace detail {

namespace {

std::span<const double> as_span(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

void require_layout(const ModelBounds& bounds) {
    if (bounds.qrs.num_hermite != ColumnMap::qrs_count || !bounds.qrs.has_sigmoid ||
        bounds.t.num_hermite != ColumnMap::t_count || !bounds.t.has_sigmoid ||
        bounds.p.num_hermite != ColumnMap::p_count || bounds.p.has_sigmoid) {
        throw ConfigError("dictionary layout must be QRS 7+1, T 4+1, P 4");
    }
}

}  // namespace

AssembledSystem assemble_values(const NonlinearParams& params, const BeatSignal& beat,
                                const ModelBounds& bounds, const ModelOptions& opts,
                                bool with_derivatives) {
    require_layout(bounds);
    const auto grid = as_span(beat.time);
    const Eigen::Index n = beat.size();

    AssembledSystem sys;
    sys.map.has_baseline = opts.include_baseline;
    const Eigen::Index cols = sys.map.columns();
    using Map = ColumnMap;

    const Matrix qrs = build_wave_columns(bounds.qrs, params.lambda_qrs, params.tau_qrs, grid);
    const Matrix t = build_wave_columns(bounds.t, params.lambda_t, params.tau_t, grid);
    const Matrix p = build_wave_columns(bounds.p, params.lambda_p, params.tau_p, grid);

    sys.phi.resize(n, cols);
    sys.phi.middleCols(Map::qrs_begin, Map::qrs_count) = qrs.leftCols(Map::qrs_count);
    sys.phi.middleCols(Map::t_begin, Map::t_count) = t.leftCols(Map::t_count);
    sys.phi.middleCols(Map::p_begin, Map::p_count) = p;
    sys.sigmoid_qrs = qrs.col(Map::qrs_count);
    sys.sigmoid_t = t.col(Map::t_count);
    sys.phi.col(Map::sigmoid) = sys.sigmoid_qrs - sys.sigmoid_t;
    if (opts.include_baseline) {
        sys.phi.col(Map::baseline) = baseline_column(params, grid, as_span(beat.samples));
    }

    if (!with_derivatives) return sys;

    for (auto& d : sys.dphi) d = Matrix::Zero(n, cols);
    const auto jq = build_wave_jacobian(bounds.qrs, params.lambda_qrs, params.tau_qrs, grid);
    const auto jt = build_wave_jacobian(bounds.t, params.lambda_t, params.tau_t, grid);
    const auto jp = build_wave_jacobian(bounds.p, params.lambda_p, params.tau_p, grid);

    sys.dphi[kLambdaQrs].middleCols(Map::qrs_begin, Map::qrs_count) =
        jq.d_dlambda.leftCols(Map::qrs_count);
    sys.dphi[kLambdaQrs].col(Map::sigmoid) = jq.d_dlambda.col(Map::qrs_count);
    sys.dphi[kTauQrs].middleCols(Map::qrs_begin, Map::qrs_count) = jq.d_dtau.leftCols(Map::qrs_count);
    sys.dphi[kTauQrs].col(Map::sigmoid) = jq.d_dtau.col(Map::qrs_count);

    sys.dphi[kLambdaT].middleCols(Map::t_begin, Map::t_count) = jt.d_dlambda.leftCols(Map::t_count);
    sys.dphi[kLambdaT].col(Map::sigmoid) = -jt.d_dlambda.col(Map::t_count);
    sys.dphi[kTauT].middleCols(Map::t_begin, Map::t_count) = jt.d_dtau.leftCols(Map::t_count);
    sys.dphi[kTauT].col(Map::sigmoid) = -jt.d_dtau.col(Map::t_count);

    sys.dphi[kLambdaP].middleCols(Map::p_begin, Map::p_count) = jp.d_dlambda;
    sys.dphi[kTauP].middleCols(Map::p_begin, Map::p_count) = jp.d_dtau;

    if (opts.include_baseline) {
        const Matrix bj = baseline_jacobian(params, grid, as_span(beat.samples));
        sys.dphi[kLambdaQrs].col(Map::baseline) = bj.col(0);
        sys.dphi[kTauQrs].col(Map::baseline) = bj.col(1);
        sys.dphi[kLambdaT].col(Map::baseline) = bj.col(2);
        sys.dphi[kTauT].col(Map::baseline) = bj.col(3);
    }
    return sys;
}

LinearSolve::LinearSolve(const AssembledSystem& sys, const Vector& f, const ModelOptions& opts) {
    const Eigen::Index cols = sys.phi.cols();
    const Eigen::Index pin = ColumnMap::p_gauss_col;

    active_ = sys.phi;
    factor(active_);
    Vector c = cod_.solve(f);

    solution_.constraint_active = false;
    if (opts.p_wave_nonnegative && c[pin] < 0.0) {
        // With a single inequality, the constrained optimum lies on c[pin] = 0
        // whenever the unconstrained one violates it.
        active_.resize(sys.phi.rows(), cols - 1);
        active_.leftCols(pin) = sys.phi.leftCols(pin);
        active_.rightCols(cols - pin - 1) = sys.phi.rightCols(cols - pin - 1);
        factor(active_);
        const Vector reduced = cod_.solve(f);
        c.head(pin) = reduced.head(pin);
        c[pin] = 0.0;
        c.tail(cols - pin - 1) = reduced.tail(cols - pin - 1);
        solution_.constraint_active = true;
    }
    solution_.coeffs = std::move(c);
    residual_ = f - sys.phi * solution_.coeffs;
}

void LinearSolve::factor(const Matrix& a) {
    cod_.setThreshold(kPivotThreshold);
    cod_.compute(a);
    solution_.rank = cod_.rank();
    solution_.rank_deficient = solution_.rank < a.cols();
}

Vector LinearSolve::project_out(const Vector& v) const {
    return v - active_ * cod_.solve(v);
}

}  // namespace detail

AssembledSystem assemble(const NonlinearParams& params, const BeatSignal& beat,
                         const ModelBounds& bounds, const ModelOptions& opts) {
    return detail::assemble_values(params, beat, bounds, opts, true);
}

CoeffSolution solve_coeffs(const AssembledSystem& sys, const Vector& f, const ModelOptions& opts) {
    return detail::LinearSolve(sys, f, opts).solution();
}

double residual(const NonlinearParams& params, const BeatSignal& beat, const ModelBounds& bounds,
                const ModelOptions& opts) {
    const auto sys = detail::assemble_values(params, beat, bounds, opts, false);
    return detail::LinearSolve(sys, beat.samples, opts).residual().squaredNorm();
}

std::array<double, NonlinearParams::size> gradient(const NonlinearParams& params,
                                                   const BeatSignal& beat,
                                                   const ModelBounds& bounds,
                                                   const ModelOptions& opts) {
    const auto sys = assemble(params, beat, bounds, opts);
    const detail::LinearSolve ls(sys, beat.samples, opts);
    const Vector& c = ls.solution().coeffs;
    std::array<double, NonlinearParams::size> g{};
    for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] = -2.0 * ls.residual().dot(sys.dphi[k] * c);
    }
    return g;
}

const Vector& ModelFit::component(WaveKind w) const {
    switch (w) {
        case WaveKind::qrs: return qrs;
        case WaveKind::t: return t;
        case WaveKind::p: return p;
    }
    return qrs;
}

void split_components(const AssembledSystem& sys, const Vector& coeffs, ModelFit& fit) {
    using Map = ColumnMap;
    const double cs = coeffs[Map::sigmoid];
    fit.qrs = sys.phi.middleCols(Map::qrs_begin, Map::qrs_count) *
                  coeffs.segment(Map::qrs_begin, Map::qrs_count) +
              cs * sys.sigmoid_qrs;
    fit.t = sys.phi.middleCols(Map::t_begin, Map::t_count) * coeffs.segment(Map::t_begin, Map::t_count) -
            cs * sys.sigmoid_t;
    fit.p = sys.phi.middleCols(Map::p_begin, Map::p_count) * coeffs.segment(Map::p_begin, Map::p_count);
    if (sys.map.has_baseline) {
        fit.baseline = coeffs[Map::baseline] * sys.phi.col(Map::baseline);
    } else {
        fit.baseline = Vector::Zero(sys.phi.rows());
    }
}

ModelFit evaluate_model(const NonlinearParams& params, const BeatSignal& beat,
                        const ModelBounds& bounds, const ModelOptions& opts) {
    const auto sys = detail::assemble_values(params, beat, bounds, opts, false);
    const detail::LinearSolve ls(sys, beat.samples, opts);
    ModelFit fit;
    fit.params = params;
    fit.coeffs = ls.solution().coeffs;
    fit.rank_deficient = ls.solution().rank_deficient;
    split_components(sys, fit.coeffs, fit);
    fit.residual_sq = (beat.samples - fit.reconstruction()).squaredNorm();
    return fit;
}

}  // namespace vpecg
