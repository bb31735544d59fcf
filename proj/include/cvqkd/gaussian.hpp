#pragma once

// Gaussian-state numerics in shot-noise units (vacuum quadrature variance = 1).
// Everything here operates on the symmetric two-mode covariance form
//   [ a I      c sigma_z ]
//   [ c sigma_z      b I ]
// which is the only shape the four-state analysis produces.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cvqkd/errors.hpp"

namespace cvqkd {

enum class Status { Physical, UnphysicalCovariance, UnphysicalNlaMapping };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Physical: return "Physical";
        case Status::UnphysicalCovariance: return "UnphysicalCovariance";
        case Status::UnphysicalNlaMapping: return "UnphysicalNlaMapping";
    }
    return "?";
}

struct TwoModeCovariance {
    double a;  // mode-A diagonal variance
    double b;  // mode-B diagonal variance
    double c;  // sigma_z correlation coefficient
};

struct SymplecticPair {
    double nu1;  // nu1 >= nu2
    double nu2;
    bool physical;  // nu2 >= 1 up to the boundary tolerance
};

// Degenerate configurations (identity channel, pure states) sit exactly on the
// physicality boundary; excursions below it smaller than this are rounding.
inline constexpr double kBoundaryTol = 1e-9;

// Von Neumann entropy of a thermal state with mean photon number x,
// G(x) = (x+1)log2(1+x) - x log2 x, extended by G(0) = 0.
inline double entropy_G(double x) {
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::domain_error("entropy_G: argument must be finite and nonnegative");
    if (x == 0.0) return 0.0;
    constexpr double inv_ln2 = 1.4426950408889634074;
    return ((x + 1.0) * std::log1p(x) - x * std::log(x)) * inv_ln2;
}

// G((nu-1)/2) for a symplectic eigenvalue, clamping the sub-vacuum rounding
// excursions that legitimate boundary cases produce.
inline double entropy_G_from_nu(double nu) {
    const double x = 0.5 * (nu - 1.0);
    return entropy_G(x > 0.0 ? x : 0.0);
}

// Symplectic eigenvalues nu_{1,2} = sqrt((Delta +- sqrt(Delta^2-4D))/2) with
// Delta = a^2+b^2-2c^2 and D = (ab-c^2)^2. The discriminant is evaluated in the
// factored form (a-b)^2 ((a+b)^2 - 4c^2); the expanded expression cancels
// catastrophically whenever nu1 ~ nu2 (identity channel, pure states). nu2
// comes from the invariant nu1 nu2 = |ab-c^2| rather than the minus branch,
// which loses accuracy near-degenerate for the same reason.
inline SymplecticPair symplectic_eigenvalues(const TwoModeCovariance& cm) {
    const double a = cm.a, b = cm.b, c = cm.c;
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
        throw std::domain_error("symplectic_eigenvalues: covariance entries must be finite");
    const double delta = a * a + b * b - 2.0 * c * c;
    const double sum = a + b, dif = a - b;
    double disc = dif * dif * (sum * sum - 4.0 * c * c);
    const double scale = std::max(1.0, delta * delta);
    if (disc < -kBoundaryTol * scale)
        throw UnphysicalCovarianceError("symplectic_eigenvalues: negative discriminant");
    if (disc < 0.0) disc = 0.0;
    const double nu1sq = 0.5 * (delta + std::sqrt(disc));
    if (!(nu1sq > 0.0))
        throw UnphysicalCovarianceError("symplectic_eigenvalues: nonpositive squared eigenvalue");
    const double nu1 = std::sqrt(nu1sq);
    const double det = a * b - c * c;  // = sqrt(D) up to sign
    const double nu2 = std::abs(det) / nu1;
    const bool physical = nu2 >= 1.0 - kBoundaryTol && det > 0.0;
    return {nu1, nu2, physical};
}

// Conditional eigenvalue after Bob's homodyne measurement,
// nu3 = sqrt(V (V - T Z^2 / (T V_A + 1 + T eps))) with V = 2 alpha^2 + 1.
inline double conditional_eigenvalue_v3(double alpha, double T, double eps, double Z) {
    const double va = 2.0 * alpha * alpha;
    const double V = va + 1.0;
    const double bob = T * va + 1.0 + T * eps;  // = T(V + chi)
    const double arg = V * (V - T * Z * Z / bob);
    if (arg < -kBoundaryTol * V * V)
        throw UnphysicalCovarianceError("conditional_eigenvalue_v3: negative squared eigenvalue");
    return std::sqrt(arg > 0.0 ? arg : 0.0);
}

struct KeyRateBreakdown {
    double mutual_information;  // bits/use
    double holevo_bound;        // bits/use
    double rate;                // bits/use; NaN unless status == Physical
    double nu1;
    double nu2;
    double nu3;
    Status status;
};

}  // namespace cvqkd
