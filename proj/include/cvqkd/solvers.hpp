#pragma once

// Frontier solvers: the largest channel loss (dB) and the largest excess noise
// at which the key rate stays nonnegative, for the original and the
// NLA-modified protocol. The rate is cheap and smooth, so a coarse scan that
// audits the sign structure followed by plain bisection is both robust and
// exact enough; derivative methods buy nothing at the unphysical-mapping
// boundary where the rate is undefined.

#include <cmath>
#include <functional>
#include <optional>

#include "cvqkd/nla.hpp"

namespace cvqkd {

struct FiberModel {
    double attenuation = 0.2;  // dB/km
};

inline double loss_to_transmittance(double loss_db) { return std::pow(10.0, -0.1 * loss_db); }
inline double transmittance_to_loss(double T) { return -10.0 * std::log10(T); }
inline double distance_to_loss(double km, const FiberModel& f = {}) { return f.attenuation * km; }
inline double loss_to_distance(double loss_db, const FiberModel& f = {}) {
    return loss_db / f.attenuation;
}

struct FrontierResult {
    double value = 0.0;  // loss in dB or eps in shot-noise units
    double lo = 0.0;     // final bisection bracket
    double hi = 0.0;
    int iterations = 0;
    bool converged = false;
    bool multiple_crossings = false;  // coarse scan saw more than one sign change
};

namespace detail {

// Largest x in [x_lo, x_hi] with rate(x) >= 0, assuming the rate decreases
// through zero once. An empty optional marks an undefined rate (unphysical NLA
// mapping); leading undefined points are skipped (the modified protocol only
// exists above a gain-dependent minimum loss), later ones count as negative.
// A 64-point scan audits the sign structure first: no positive start or no
// crossing inside the range returns converged = false, extra sign changes are
// flagged but the first downward crossing is still refined.
inline FrontierResult descend_to_zero(const std::function<std::optional<double>(double)>& rate,
                                      double x_lo, double x_hi, double tol) {
    constexpr int kScanPoints = 64;
    FrontierResult out;
    const double step = (x_hi - x_lo) / (kScanPoints - 1);

    int sign_changes = 0;
    int prev_sign = 0;  // 0 until the first defined point
    double prev_x = x_lo;
    bool seen_defined = false, first_defined_negative = false;
    double lo = 0.0, hi = 0.0;
    bool have_bracket = false;
    for (int i = 0; i < kScanPoints; ++i) {
        const double x = (i == kScanPoints - 1) ? x_hi : x_lo + step * i;
        const std::optional<double> r = rate(x);
        int sign;
        if (r) {
            sign = *r >= 0.0 ? 1 : -1;
            if (!seen_defined && sign < 0) first_defined_negative = true;
            seen_defined = true;
        } else if (seen_defined) {
            sign = -1;  // dead past the physical window
        } else {
            continue;
        }
        if (prev_sign != 0 && sign != prev_sign) {
            ++sign_changes;
            if (sign < 0 && !have_bracket) {
                lo = prev_x;
                hi = x;
                have_bracket = true;
            }
        }
        prev_sign = sign;
        prev_x = x;
    }
    out.multiple_crossings = sign_changes > 1;
    if (!seen_defined || first_defined_negative) return out;  // value 0, not converged
    if (!have_bracket) {  // still nonnegative at x_hi
        out.value = out.lo = out.hi = x_hi;
        return out;
    }

    while (hi - lo > tol && out.iterations < 200) {
        const double mid = 0.5 * (lo + hi);
        const std::optional<double> r = rate(mid);
        if (r && *r >= 0.0)
            lo = mid;
        else
            hi = mid;
        ++out.iterations;
    }
    out.lo = lo;
    out.hi = hi;
    out.value = 0.5 * (lo + hi);
    out.converged = hi - lo <= tol;
    return out;
}

inline std::function<std::optional<double>(double)> rate_vs_loss(
    const ProtocolParams& p, double excess_noise, const std::optional<NlaParams>& nla) {
    return [=](double loss_db) -> std::optional<double> {
        const ChannelParams ch{loss_to_transmittance(loss_db), excess_noise};
        const KeyRateBreakdown kr = nla ? nla_key_rate(p, ch, *nla) : key_rate(p, ch);
        if (kr.status != Status::Physical) return std::nullopt;
        return kr.rate;
    };
}

}  // namespace detail

// Largest tolerable loss in dB. The search range must cover the g = 4 shifted
// crossing near 102 dB at eps = 0, hence the 130 dB default.
inline FrontierResult max_loss(const ProtocolParams& p, double excess_noise,
                               const std::optional<NlaParams>& nla = std::nullopt,
                               double tol = 1e-3, double loss_hi_db = 130.0) {
    return detail::descend_to_zero(detail::rate_vs_loss(p, excess_noise, nla), 0.0, loss_hi_db,
                                   tol);
}

// Largest tolerable excess noise at a fixed loss. For NLA runs the feasibility
// region g <= g_max(T, eps) shrinks as eps grows; infeasible points count as
// rate-undefined, so the frontier is min(rate crossing, feasibility edge).
inline FrontierResult max_excess_noise(const ProtocolParams& p, double loss_db,
                                       const std::optional<NlaParams>& nla = std::nullopt,
                                       double tol = 1e-6, double eps_hi = 0.5) {
    const double T = loss_to_transmittance(loss_db);
    auto rate = [=](double eps) -> std::optional<double> {
        const ChannelParams ch{T, eps};
        const KeyRateBreakdown kr = nla ? nla_key_rate(p, ch, *nla) : key_rate(p, ch);
        if (kr.status != Status::Physical) return std::nullopt;
        return kr.rate;
    };
    return detail::descend_to_zero(rate, 0.0, eps_hi, tol);
}

}  // namespace cvqkd
