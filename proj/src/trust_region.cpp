#include "linear_solve.h"
#include "vpecg/errors.h"
#include "vpecg/varpro.h"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace vpecg {

namespace {

constexpr std::size_t kDim = NonlinearParams::size;
using Vec6 = Eigen::Matrix<double, kDim, 1>;
using Mat6 = Eigen::Matrix<double, kDim, kDim>;

// Maps the box of bounds onto [0, 1]^6 so that step lengths are comparable
// across dilations (1/s) and translations (s).
struct BoxScaling {
    std::array<Interval, kDim> box;

    explicit BoxScaling(const ModelBounds& bounds) {
        for (std::size_t k = 0; k < kDim; ++k) box[k] = bounds.param_interval(k);
    }

    double range(std::size_t k) const {
        const double w = box[k].width();
        return w > 0.0 ? w : 1.0;
    }

    Vec6 to_unit(const NonlinearParams& p) const {
        const auto a = p.to_array();
        Vec6 u;
        for (std::size_t k = 0; k < kDim; ++k) {
            u[k] = box[k].width() > 0.0 ? (a[k] - box[k].lo) / box[k].width() : 0.0;
        }
        return u;
    }

    NonlinearParams from_unit(const Vec6& u) const {
        std::array<double, kDim> a{};
        for (std::size_t k = 0; k < kDim; ++k) {
            a[k] = box[k].clamp(box[k].lo + std::clamp(u[k], 0.0, 1.0) * box[k].width());
        }
        return NonlinearParams::from_array(a);
    }
};

struct Evaluation {
    NonlinearParams params;
    double objective = std::numeric_limits<double>::infinity();
    double r2 = 0.0;
    bool feasible = false;  // ordering constraints satisfied
    bool rank_deficient = false;
    Vec6 grad = Vec6::Zero();
    Mat6 hess = Mat6::Zero();
};

class Problem {
public:
    Problem(const BeatSignal& beat, const ModelBounds& bounds, const OptimizerConfig& cfg,
            const ModelOptions& opts)
        : beat_(beat), bounds_(bounds), opts_(opts), scaling_(bounds),
          mu_(penalty_weight(beat, cfg)) {}

    const BoxScaling& scaling() const { return scaling_; }

    // Objective only, or objective with Gauss-Newton gradient/Hessian in unit
    // coordinates. Returns nullopt where the model is undefined (knot collision).
    std::optional<Evaluation> evaluate(const NonlinearParams& params, bool with_model) const {
        Evaluation ev;
        ev.params = params;
        try {
            const auto sys = detail::assemble_values(params, beat_, bounds_, opts_, with_model);
            const detail::LinearSolve ls(sys, beat_.samples, opts_);
            const Vector& r = ls.residual();
            ev.r2 = r.squaredNorm();
            ev.rank_deficient = ls.solution().rank_deficient;

            const auto ordering = check_ordering(params, beat_.window_start(), beat_.size(), beat_.fs);
            ev.feasible = ordering.feasible;
            double pen = 0.0;
            std::array<double, 4> pen_res{};
            for (std::size_t i = 0; i < 4; ++i) {
                pen_res[i] = std::sqrt(mu_) * std::max(0.0, ordering.excess[i]);
                pen += pen_res[i] * pen_res[i];
            }
            ev.objective = ev.r2 + pen;
            if (!with_model) return ev;

            // Jacobian of the stacked residual [r; sqrt(mu) max(0, excess)] in
            // unit coordinates. The projection part uses Kaufman's form.
            const Vector& c = ls.solution().coeffs;
            Eigen::Matrix<double, Eigen::Dynamic, kDim> jr(r.size(), kDim);
            for (std::size_t k = 0; k < kDim; ++k) {
                jr.col(static_cast<Eigen::Index>(k)) =
                    -ls.project_out(sys.dphi[k] * c) * scaling_.range(k);
            }
            Eigen::Matrix<double, 4, kDim> jp = Eigen::Matrix<double, 4, kDim>::Zero();
            const auto oj = ordering_jacobian(params, beat_.fs);
            for (std::size_t i = 0; i < 4; ++i) {
                if (ordering.excess[i] <= 0.0) continue;
                for (std::size_t k = 0; k < kDim; ++k) {
                    jp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                        std::sqrt(mu_) * oj[i][k] * scaling_.range(k);
                }
            }
            const Eigen::Map<const Eigen::Vector4d> pr(pen_res.data());
            // The gradient of r2 uses r directly: P_perp r = r makes Kaufman's
            // Jacobian exact for it.
            for (std::size_t k = 0; k < kDim; ++k) {
                ev.grad[static_cast<Eigen::Index>(k)] =
                    -2.0 * r.dot(sys.dphi[k] * c) * scaling_.range(k);
            }
            ev.grad += 2.0 * jp.transpose() * pr;
            ev.hess = 2.0 * (jr.transpose() * jr + jp.transpose() * jp);
            return ev;
        } catch (const KnotCollision&) {
            return std::nullopt;
        } catch (const BoundsViolation&) {
            return std::nullopt;
        }
    }

private:
    const BeatSignal& beat_;
    const ModelBounds& bounds_;
    ModelOptions opts_;
    BoxScaling scaling_;
    double mu_;
};

// Minimizes g^T d + d^T H d / 2 over ||d|| <= radius for the free variables.
Vec6 trust_region_step(const Vec6& g, const Mat6& h, const std::array<bool, kDim>& free,
                       double radius) {
    std::array<Eigen::Index, kDim> idx{};
    Eigen::Index m = 0;
    for (std::size_t k = 0; k < kDim; ++k) {
        if (free[k]) idx[static_cast<std::size_t>(m++)] = static_cast<Eigen::Index>(k);
    }
    Vec6 step = Vec6::Zero();
    if (m == 0) return step;

    Eigen::MatrixXd hf(m, m);
    Eigen::VectorXd gf(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        gf[i] = g[idx[i]];
        for (Eigen::Index j = 0; j < m; ++j) hf(i, j) = h(idx[i], idx[j]);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hf);
    const Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::VectorXd qg = eig.eigenvectors().transpose() * gf;
    const double scale = std::max(ev.maxCoeff(), 1e-300);

    auto step_for = [&](double shift) {
        Eigen::VectorXd y(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double denom = ev[i] + shift;
            y[i] = denom > 0.0 ? -qg[i] / denom : 0.0;
        }
        return Eigen::VectorXd(eig.eigenvectors() * y);
    };

    Eigen::VectorXd d;
    const bool well_posed = ev.minCoeff() > 1e-12 * scale;
    if (well_posed) d = step_for(0.0);
    if (!well_posed || d.norm() > radius) {
        // Find the shift giving ||d|| = radius; ||d(shift)|| is decreasing.
        double lo = 0.0;
        double hi = scale;
        while (step_for(hi).norm() > radius) hi *= 4.0;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (step_for(mid).norm() > radius) lo = mid; else hi = mid;
            if (hi - lo <= 1e-14 * hi) break;
        }
        d = step_for(hi);
    }
    for (Eigen::Index i = 0; i < m; ++i) step[idx[i]] = d[i];
    return step;
}

}  // namespace

double penalty_weight(const BeatSignal& beat, const OptimizerConfig& cfg) {
    if (beat.size() == 0) return 0.0;
    return cfg.penalty_scale * beat.samples.squaredNorm() / static_cast<double>(beat.size());
}

double penalized_objective(const NonlinearParams& params, const BeatSignal& beat,
                           const ModelBounds& bounds, const OptimizerConfig& cfg,
                           const ModelOptions& opts) {
    const double r2 = residual(params, beat, bounds, opts);
    const auto ordering = check_ordering(params, beat.window_start(), beat.size(), beat.fs);
    const double mu = penalty_weight(beat, cfg);
    double pen = 0.0;
    for (double e : ordering.excess) pen += e > 0.0 ? e * e : 0.0;
    return r2 + mu * pen;
}

ModelFit fit(const BeatSignal& beat, const NonlinearParams& init, const ModelBounds& bounds,
             const OptimizerConfig& cfg, const ModelOptions& opts) {
    if (!bounds.contains(init)) {
        std::ostringstream os;
        os << "initial parameters outside bounds (lambda_qrs=" << init.lambda_qrs
           << ", tau_qrs=" << init.tau_qrs << ", lambda_t=" << init.lambda_t
           << ", tau_t=" << init.tau_t << ", lambda_p=" << init.lambda_p << ", tau_p=" << init.tau_p
           << ")";
        throw InfeasibleInit(os.str());
    }

    const Problem problem(beat, bounds, cfg, opts);
    const auto& scaling = problem.scaling();

    auto first = problem.evaluate(init, true);
    if (!first) throw InfeasibleInit("baseline knots collide at the initial parameters");

    Evaluation current = *first;
    Vec6 u = scaling.to_unit(current.params);
    std::optional<NonlinearParams> best_feasible;
    if (current.feasible) best_feasible = current.params;

    double radius = cfg.initial_radius;
    bool converged = false;
    int iter = 0;
    while (iter < cfg.max_iters && !converged) {
        ++iter;

        std::array<bool, kDim> free{};
        for (std::size_t k = 0; k < kDim; ++k) {
            const auto ki = static_cast<Eigen::Index>(k);
            const bool at_lo = u[ki] <= 0.0 && current.grad[ki] > 0.0;
            const bool at_hi = u[ki] >= 1.0 && current.grad[ki] < 0.0;
            free[k] = !(at_lo || at_hi);
        }

        const Vec6 raw = trust_region_step(current.grad, current.hess, free, radius);
        const Vec6 trial_u = (u + raw).cwiseMax(0.0).cwiseMin(1.0);
        const Vec6 step = trial_u - u;
        const double step_norm = step.norm();
        if (step_norm < cfg.step_tol) {
            converged = true;
            break;
        }

        const double predicted = -(current.grad.dot(step) + 0.5 * step.dot(current.hess * step));
        const auto trial = problem.evaluate(scaling.from_unit(trial_u), false);
        const double actual = trial ? current.objective - trial->objective : -1.0;
        const double rho = predicted > 0.0 ? actual / predicted : -1.0;

        if (trial && actual > 0.0 && rho > 1e-4) {
            auto accepted = problem.evaluate(trial->params, true);
            if (!accepted) {
                radius = 0.25 * step_norm;
                continue;
            }
            const double previous = current.objective;
            current = *accepted;
            u = trial_u;
            if (current.feasible) best_feasible = current.params;
            if (rho > 0.75 && step_norm > 0.99 * radius) radius = std::min(2.0 * radius, 1.0);
            else if (rho < 0.25) radius = 0.25 * step_norm;
            if (previous - current.objective <= cfg.obj_tol * previous) converged = true;
        } else {
            radius = 0.25 * step_norm;
            if (radius < cfg.step_tol) converged = true;
        }
    }

    NonlinearParams result = current.params;
    if (!current.feasible && best_feasible) result = *best_feasible;

    ModelFit out = evaluate_model(result, beat, bounds, opts);
    out.iterations = iter;
    out.converged = converged;
    return out;
}

}  // namespace vpecg
