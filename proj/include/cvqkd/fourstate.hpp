#pragma once

// Analytic quantities of the four-state protocol: the lambda_k weights of the
// source state's Schmidt decomposition, the mode correlation Z, the covariance
// of Bob's state after a lossy/noisy Gaussian channel, and the asymptotic
// key-rate lower bound beta I_AB - S_BE under collective attacks (Gaussian
// extremality gives the computable bound for this non-Gaussian ensemble).

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cvqkd/gaussian.hpp"

namespace cvqkd {

struct ProtocolParams {
    double alpha;  // modulation amplitude; V_A = 2 alpha^2
    double beta;   // reconciliation efficiency in (0, 1]

    static ProtocolParams from_va(double va, double beta) {
        return {std::sqrt(0.5 * va), beta};
    }
    double va() const { return 2.0 * alpha * alpha; }
};

struct ChannelParams {
    double transmittance;  // T in (0, 1]
    double excess_noise;   // eps >= 0, referred to the channel input
};

struct LambdaWeights {
    std::array<double, 4> lambda;  // lambda_0 .. lambda_3, sums to 1

    double operator[](int k) const { return lambda[static_cast<size_t>(k)]; }
    double sum() const { return lambda[0] + lambda[1] + lambda[2] + lambda[3]; }
};

// lambda_{0,2} = e^{-a2}/2 (cosh a2 +- cos a2), lambda_{1,3} = e^{-a2}/2 (sinh a2 +- sin a2)
// with a2 = alpha^2. Below a2 = 1/2 the +- pairs cancel (lambda_3 ~ a2^3/3), so the
// interleaved Taylor series sum_j a2^(4j+k)/(4j+k)! is summed directly instead; eight
// terms reach the last representable term (a2^28/28! < 1e-37 at a2 = 1/2).
inline LambdaWeights lambda_weights(double alpha) {
    const double a2 = alpha * alpha;
    if (!std::isfinite(a2)) throw std::domain_error("lambda_weights: non-finite amplitude");
    std::array<double, 4> h;
    if (a2 < 0.5) {
        for (int k = 0; k < 4; ++k) {
            double term = 1.0;
            for (int m = 1; m <= k; ++m) term *= a2 / m;
            double tot = 0.0;
            for (int j = 0; j < 8; ++j) {
                tot += term;
                for (int m = 0; m < 4; ++m) term *= a2 / (k + 4 * j + 1 + m);
            }
            h[static_cast<size_t>(k)] = tot;
        }
    } else {
        h = {0.5 * (std::cosh(a2) + std::cos(a2)), 0.5 * (std::sinh(a2) + std::sin(a2)),
             0.5 * (std::cosh(a2) - std::cos(a2)), 0.5 * (std::sinh(a2) - std::sin(a2))};
    }
    const double damp = std::exp(-a2);
    return {{damp * h[0], damp * h[1], damp * h[2], damp * h[3]}};
}

// Z = 2 alpha^2 sum_k lambda_k^{3/2} / lambda_{k+1}^{1/2} (index mod 4), the
// X_A X_B correlation of the source state; bounded by the EPR value sqrt(V^2-1).
inline double correlation_Z(double alpha) {
    if (alpha == 0.0) return 0.0;
    const auto lw = lambda_weights(alpha);
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += lw[k] * std::sqrt(lw[k] / lw[(k + 1) % 4]);
    return 2.0 * alpha * alpha * s;
}

// Covariance of rho_AB after the channel: a = V, b = T V_A + 1 + T eps, c = sqrt(T) Z.
inline TwoModeCovariance channel_covariance(const ProtocolParams& p, const ChannelParams& ch) {
    const double T = ch.transmittance;
    return {p.va() + 1.0, T * p.va() + 1.0 + T * ch.excess_noise,
            std::sqrt(T) * correlation_Z(p.alpha)};
}

// I_AB = 1/2 log2(1 + SNR) with SNR = T V_A / (1 + T eps) for homodyne detection.
inline double mutual_information(const ProtocolParams& p, const ChannelParams& ch) {
    constexpr double inv_ln2 = 1.4426950408889634074;
    const double snr = ch.transmittance * p.va() / (1.0 + ch.transmittance * ch.excess_noise);
    return 0.5 * std::log1p(snr) * inv_ln2;
}

struct HolevoBound {
    double value;  // S_BE upper bound in bits/use
    double nu1;
    double nu2;
    double nu3;
    Status status;
};

// S_BE <= G((nu1-1)/2) + G((nu2-1)/2) - G((nu3-1)/2) for the Gaussian state
// with the same covariance matrix.
inline HolevoBound holevo_bound(const ProtocolParams& p, const ChannelParams& ch) {
    const double Z = correlation_Z(p.alpha);
    const double T = ch.transmittance;
    const TwoModeCovariance cm{p.va() + 1.0, T * p.va() + 1.0 + T * ch.excess_noise,
                               std::sqrt(T) * Z};
    const SymplecticPair nus = symplectic_eigenvalues(cm);
    const double nu3 = conditional_eigenvalue_v3(p.alpha, T, ch.excess_noise, Z);
    const Status status = (nus.physical && nu3 >= 1.0 - kBoundaryTol)
                              ? Status::Physical
                              : Status::UnphysicalCovariance;
    const double s =
        entropy_G_from_nu(nus.nu1) + entropy_G_from_nu(nus.nu2) - entropy_G_from_nu(nu3);
    return {s, nus.nu1, nus.nu2, nu3, status};
}

// Lower bound on the secret key rate, R = beta I_AB - S_BE. Negative rates are
// reported as-is so frontier solvers can bisect on the sign.
inline KeyRateBreakdown key_rate(const ProtocolParams& p, const ChannelParams& ch) {
    const double i_ab = mutual_information(p, ch);
    const HolevoBound hb = holevo_bound(p, ch);
    const double rate = hb.status == Status::Physical
                            ? p.beta * i_ab - hb.value
                            : std::numeric_limits<double>::quiet_NaN();
    return {i_ab, hb.value, rate, hb.nu1, hb.nu2, hb.nu3, hb.status};
}

}  // namespace cvqkd
