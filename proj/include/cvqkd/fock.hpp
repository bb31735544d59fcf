#pragma once

// Brute-force truncated-Fock-space oracle. Nothing here reuses the covariance
// algebra of the analytic modules: states are assembled from their
// photon-number expansions and moments are taken against explicit operator
// matrices, so agreement with the closed forms is an independent check, not a
// tautology.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cvqkd/errors.hpp"
#include "cvqkd/fourstate.hpp"
#include "cvqkd/nla.hpp"

namespace cvqkd::fock {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

struct FockVector {
    Vector amplitudes;  // photon-number basis, index 0..N

    int truncation() const { return static_cast<int>(amplitudes.size()) - 1; }
    double tail_mass() const { return 1.0 - amplitudes.squaredNorm(); }
};

struct FockDensityMatrix {
    Matrix entries;  // photon-number basis, 0..N

    int truncation() const { return static_cast<int>(entries.rows()) - 1; }
    double trace() const { return entries.trace().real(); }
    double hermiticity_defect() const {
        return (entries - entries.adjoint()).cwiseAbs().maxCoeff();
    }
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(entries, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }
};

// X = a + a^dagger as a matrix; vacuum variance 1 in this convention, so
// oracle moments compare directly against covariance-matrix entries.
inline Matrix quadrature_X(int N) {
    Matrix X = Matrix::Zero(N + 1, N + 1);
    for (int n = 0; n < N; ++n) X(n, n + 1) = X(n + 1, n) = std::sqrt(n + 1.0);
    return X;
}

inline FockVector coherent_state(Complex beta, int N) {
    Vector v(N + 1);
    Complex t = std::exp(-0.5 * std::norm(beta));
    v(0) = t;
    for (int n = 1; n <= N; ++n) {
        t *= beta / std::sqrt(static_cast<double>(n));
        v(n) = t;
    }
    return {v};
}

// The four orthonormal superpositions of photon numbers n = k (mod 4),
// phi_k ~ sum_j (-1)^j alpha^(4j+k)/sqrt((4j+k)!) |4j+k>, normalized by
// sqrt(lambda_k). Support classes are disjoint, so orthogonality is exact and
// the per-class occupancy against lambda_k measures truncation adequacy.
inline std::array<FockVector, 4> build_phi_states(double alpha, int N) {
    if (!(alpha > 0.0)) throw std::domain_error("build_phi_states: amplitude must be positive");
    if (N < 4) throw std::domain_error("build_phi_states: cutoff too small");
    const double a2 = alpha * alpha;
    const LambdaWeights lw = lambda_weights(alpha);
    std::array<FockVector, 4> out;
    for (int k = 0; k < 4; ++k) {
        Vector v = Vector::Zero(N + 1);
        double t = std::exp(-0.5 * a2);
        for (int m = 1; m <= k; ++m) t *= alpha / std::sqrt(static_cast<double>(m));
        double occupied = 0.0;  // sum of e^{-a2} a2^m / m! over the retained support
        int j = 0;
        for (int m = k; m <= N; m += 4) {
            v(m) = (j % 2 == 0) ? t : -t;
            occupied += t * t;
            t *= a2 * a2 /
                 std::sqrt(static_cast<double>(m + 1) * (m + 2) * (m + 3) * (m + 4));
            ++j;
        }
        const double tail = 1.0 - occupied / lw[k];
        if (tail > 1e-10)
            throw TruncationError("build_phi_states: tail mass " + std::to_string(tail) +
                                  " of phi_" + std::to_string(k) + " beyond cutoff " +
                                  std::to_string(N));
        v /= std::sqrt(lw[k]);
        out[static_cast<size_t>(k)] = FockVector{std::move(v)};
    }
    return out;
}

// Two-mode source amplitudes M(i,j) = <ij|Phi> assembled from the modulation
// side: Phi = 1/2 sum_k |psi_k>|alpha e^{i(2k+1)pi/4}>, where psi_k carries the
// conjugate phases e^{-i(1+2k)m pi/4} over the phi_m. That phase choice makes M
// the Schmidt form sum_m sqrt(lambda_m) phi_m phi_m^T, whose covariance is the
// analytic (V, Z) pair; tests verify both identities numerically.
inline Matrix source_state(double alpha, int N) {
    const std::array<FockVector, 4> phi = build_phi_states(alpha, N);
    constexpr double quarter_pi = std::numbers::pi / 4.0;
    Matrix M = Matrix::Zero(N + 1, N + 1);
    for (int k = 0; k < 4; ++k) {
        Vector psi = Vector::Zero(N + 1);
        for (int m = 0; m < 4; ++m)
            psi += std::exp(Complex(0.0, -(1 + 2 * k) * m * quarter_pi)) *
                   phi[static_cast<size_t>(m)].amplitudes;
        psi *= 0.5;
        const Vector b = coherent_state(alpha * std::exp(Complex(0.0, (2 * k + 1) * quarter_pi)), N)
                             .amplitudes;
        M += 0.5 * psi * b.transpose();
    }
    return M;
}

// <Phi| X ox X |Phi> / <Phi|Phi>, the oracle for correlation_Z.
inline double oracle_Z(double alpha, int N) {
    const Matrix M = source_state(alpha, N);
    const Matrix X = quadrature_X(N);
    const Complex num = (M.conjugate().cwiseProduct(X * M * X.transpose())).sum();
    return num.real() / M.squaredNorm();
}

// Mean photon number of mode B of the source state.
inline double source_mean_photons_B(const Matrix& M) {
    double s = 0.0;
    for (int j = 0; j < M.cols(); ++j) s += j * M.col(j).squaredNorm();
    return s / M.squaredNorm();
}

// D(beta), assembled column-wise from the normally ordered series
// D|n> = e^{-|beta|^2/2} e^{beta a^dag} e^{-conj(beta) a} |n>. Both exponential
// series terminate or converge absolutely inside the truncation, so each
// retained column entry is the exact matrix element up to rounding.
inline Matrix displacement_operator(Complex beta, int N) {
    Matrix D(N + 1, N + 1);
    Vector w(N + 1), u(N + 1);
    const double prefactor = std::exp(-0.5 * std::norm(beta));
    for (int n = 0; n <= N; ++n) {
        w.setZero();
        Complex t = 1.0;
        w(n) = t;
        for (int l = 1; l <= n; ++l) {
            t *= -std::conj(beta) * std::sqrt(static_cast<double>(n - l + 1)) /
                 static_cast<double>(l);
            w(n - l) = t;
        }
        u.setZero();
        for (int j = 0; j <= n; ++j) {
            Complex s = w(j);
            u(j) += s;
            for (int r = 1; r <= N - j; ++r) {
                s *= beta * std::sqrt(static_cast<double>(j + r)) / static_cast<double>(r);
                u(j + r) += s;
            }
        }
        D.col(n) = prefactor * u;
    }
    return D;
}

// rho = D(beta) rho_th(lambda) D(beta)^dagger with rho_th = (1-l^2) sum l^(2n) |n><n|.
inline FockDensityMatrix displaced_thermal(Complex beta, double lambda, int N) {
    if (!(lambda >= 0.0 && lambda < 1.0))
        throw std::domain_error("displaced_thermal: thermal parameter must be in [0, 1)");
    const Matrix D = displacement_operator(beta, N);
    Vector diag(N + 1);
    double w = 1.0 - lambda * lambda;
    for (int n = 0; n <= N; ++n) {
        diag(n) = w;
        w *= lambda * lambda;
    }
    Matrix rho = D * diag.asDiagonal() * D.adjoint();
    const double deficit = 1.0 - rho.trace().real();
    if (deficit > 1e-6)
        throw TruncationError("displaced_thermal: trace deficit " + std::to_string(deficit) +
                              " at cutoff " + std::to_string(N));
    return {std::move(rho)};
}

// Conjugation by g^n followed by trace renormalization. Divergence guard: for a
// thermal-like tail the diagonal ratio rho_NN/rho_(N-1)(N-1) estimates l^2, and
// g^2 l^2 >= 1 means the amplified series has no trace to normalize by. The
// post-hoc check catches states that converge but no longer fit the cutoff.
inline FockDensityMatrix apply_nla(const FockDensityMatrix& rho, double g) {
    if (!(g > 0.0)) throw std::domain_error("apply_nla: gain must be positive");
    const int N = rho.truncation();
    if (N >= 2) {
        const double top = rho.entries(N, N).real();
        const double below = rho.entries(N - 1, N - 1).real();
        if (below > 1e-250 && g * g * top / below >= 1.0)
            throw DivergentAmplificationError(
                "apply_nla: tail ratio " + std::to_string(top / below) + " with gain " +
                std::to_string(g) + " does not converge");
    }
    Vector gn(N + 1);
    double t = 1.0;
    for (int n = 0; n <= N; ++n) {
        gn(n) = t;
        t *= g;
    }
    Matrix out = gn.asDiagonal() * rho.entries * gn.asDiagonal();
    const double tr = out.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr))
        throw DivergentAmplificationError("apply_nla: non-normalizable output");
    out /= tr;
    double top_occupation = 0.0;
    for (int n = N - 2; n <= N; ++n) top_occupation += out(n, n).real();
    if (top_occupation > 1e-9)
        throw TruncationError("apply_nla: amplified state occupies the top of the cutoff (" +
                              std::to_string(top_occupation) + ")");
    return {std::move(out)};
}

inline Complex mean_amplitude(const FockDensityMatrix& rho) {
    const int N = rho.truncation();
    Complex s = 0.0;
    for (int n = 0; n < N; ++n) s += std::sqrt(n + 1.0) * rho.entries(n + 1, n);
    return s / rho.trace();
}

inline double mean_photons(const FockDensityMatrix& rho) {
    const int N = rho.truncation();
    double s = 0.0;
    for (int n = 0; n <= N; ++n) s += n * rho.entries(n, n).real();
    return s / rho.trace();
}

// Var(a + a^dag) = 1 + 2<n> + 2 Re<a^2> - (2 Re<a>)^2.
inline double quadrature_variance(const FockDensityMatrix& rho) {
    const int N = rho.truncation();
    Complex a2 = 0.0;  // <a^2> = sum sqrt((n+1)(n+2)) rho_{n+2,n}
    for (int n = 0; n + 2 <= N; ++n)
        a2 += std::sqrt((n + 1.0) * (n + 2.0)) * rho.entries(n + 2, n);
    a2 /= rho.trace();
    const double mean_x = 2.0 * mean_amplitude(rho).real();
    return 1.0 + 2.0 * mean_photons(rho) + 2.0 * a2.real() - mean_x * mean_x;
}

inline double quadrature_mean(const FockDensityMatrix& rho) {
    return 2.0 * mean_amplitude(rho).real();
}

// Thermal parameter squared recovered from the variance, (Var-1)/(Var+1);
// displacement leaves the variance untouched, so this reads l^2 directly.
inline double thermal_parameter_sq(const FockDensityMatrix& rho) {
    const double var = quadrature_variance(rho);
    return (var - 1.0) / (var + 1.0);
}

// X variance of the NLA output on Bob's equal four-state mixture: each branch
// is the displaced thermal state with beta_k = sqrt(T) alpha e^{i(2k+1)pi/4}
// and the channel's thermal parameter, mixed, then amplified.
inline double oracle_output_variance(const ProtocolParams& p, const ChannelParams& ch, double g,
                                     int N) {
    const double lam = lambda_from_noise(ch);
    const double sqrt_T = std::sqrt(ch.transmittance);
    constexpr double quarter_pi = std::numbers::pi / 4.0;
    Matrix mix = Matrix::Zero(N + 1, N + 1);
    for (int k = 0; k < 4; ++k) {
        const Complex beta_k =
            sqrt_T * p.alpha * std::exp(Complex(0.0, (2 * k + 1) * quarter_pi));
        mix += 0.25 * displaced_thermal(beta_k, lam, N).entries;
    }
    const FockDensityMatrix out = apply_nla(FockDensityMatrix{std::move(mix)}, g);
    return quadrature_variance(out);
}

}  // namespace cvqkd::fock
