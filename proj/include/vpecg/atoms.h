#pragma once

#include <array>
#include <cstddef>

namespace vpecg {

// Largest Hermite order any dictionary uses (QRS: orders 0..6; the derivative
// recurrence reaches one order further).
inline constexpr int kMaxHermiteOrder = 7;

// Argument rescale of order j is kHermiteRescale^j; it makes the effective
// supports of all orders roughly coincide with that of order 0.
inline constexpr double kHermiteRescale = 1.11;

double hermite_rescale(int order);

enum class AtomKind { hermite, sigmoid };

struct AtomSpec {
    AtomKind kind = AtomKind::hermite;
    int order = 0;          // hermite only
    double lambda = 1.0;    // dilation, 1/s, > 0
    double tau = 0.0;       // translation, s

    bool valid() const noexcept;
};

struct AtomDerivs {
    double d_dlambda = 0.0;
    double d_dtau = 0.0;
};

/// Physicists' Hermite polynomial h_j(t) by the three-term recurrence.
double hermite_poly(int order, double t);

/// Orthonormal Hermite function phi_j(t) = h_j(t) exp(-t^2/2) / sqrt(2^j j! sqrt(pi)).
/// Evaluated with the normalized recurrence so the Gaussian weight is carried
/// along and nothing overflows for large |t|.
double hermite_fn(int order, double t);

/// Fills out[0..n) with phi_0(t)..phi_{n-1}(t).
void hermite_fns(double t, std::size_t n, double* out);

/// phi_j'(t) = sqrt(j/2) phi_{j-1}(t) - sqrt((j+1)/2) phi_{j+1}(t).
double hermite_fn_deriv(int order, double t);

/// Logistic sigmoid with fixed inner slope 2: 1 / (1 + exp(-2x)).
double sigmoid(double x);
double sigmoid_deriv(double x);

/// Rescaled, dilated and translated atom evaluated at t.
double atom_value(const AtomSpec& spec, double t);

/// Time derivative of atom_value.
double atom_time_deriv(const AtomSpec& spec, double t);

/// Partial derivatives of atom_value with respect to lambda and tau.
AtomDerivs atom_param_derivs(const AtomSpec& spec, double t);

}  // namespace vpecg
