#pragma once

// Internal: the constrained linear least-squares step shared by the variable
// projection functional and the trust-region fitter.

#include "vpecg/varpro.h"

#include <Eigen/QR>

namespace vpecg::detail {

inline constexpr double kPivotThreshold = 1e-10;

class LinearSolve {
public:
    LinearSolve(const AssembledSystem& sys, const Vector& f, const ModelOptions& opts);

    const CoeffSolution& solution() const noexcept { return solution_; }
    const Vector& residual() const noexcept { return residual_; }

    // v minus its projection onto the span of the active columns.
    Vector project_out(const Vector& v) const;

private:
    void factor(const Matrix& a);

    Matrix active_;  // phi, or phi without the pinned column
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod_;
    CoeffSolution solution_;
    Vector residual_;
};

// Rows of the assembled matrix without building derivative blocks.
AssembledSystem assemble_values(const NonlinearParams& params, const BeatSignal& beat,
                                const ModelBounds& bounds, const ModelOptions& opts,
                                bool with_derivatives);

}  // namespace vpecg::detail
