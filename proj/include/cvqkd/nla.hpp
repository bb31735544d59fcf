#pragma once

// Noiseless-linear-amplifier layer. A g^n device placed before Bob's detector,
// conditioned on success, maps the (T, eps) channel to an equivalent NLA-free
// channel (eta, eps_g) acting on the same modulation; the key rate of the
// modified protocol is P_success times the ordinary rate at (eta, eps_g).

#include <cmath>
#include <limits>
#include <optional>

#include "cvqkd/fourstate.hpp"

namespace cvqkd {

struct NlaParams {
    double gain;  // amplitude gain g >= 1
    // Success-probability model: empty = 1/g^2 (the tightest gain-independent
    // bound), or a fixed value in (0, 1]. P only rescales the rate; zero
    // crossings do not move.
    std::optional<double> fixed_success{};

    double success_probability() const {
        return fixed_success ? *fixed_success : 1.0 / (gain * gain);
    }
};

// Largest gain for which the equivalent channel stays physical (eta <= 1,
// eps_g >= 0). The closed form (-2 sqrt(T) + 2 sqrt(T + T eps (2+T eps)))/(2 T eps)
// is rationalized to (2 + T eps)/(sqrt(T + T eps (2+T eps)) + sqrt(T)), which
// needs no eps = 0 branch and limits to 1/sqrt(T) there.
inline double g_max(const ChannelParams& ch) {
    const double T = ch.transmittance;
    const double te = T * ch.excess_noise;
    return (2.0 + te) / (std::sqrt(T + te * (2.0 + te)) + std::sqrt(T));
}

struct EquivalentChannel {
    double eta;    // transmittance of the NLA-free channel with the same output
    double eps_g;  // its excess noise
    // The mapping leaves the modulation amplitude untouched, so ProtocolParams
    // pass through nla_key_rate unchanged.
    bool physical;  // eta <= 1 and eps_g >= 0, equivalently g <= g_max
};

// eta = 4 g^2 T / (2 + (1-g^2) T eps)^2,  eps_g = eps - (g^2-1) T eps^2 / 2.
// eps_g is evaluated as eps/2 times the shared denominator, which is the same
// polynomial exactly and keeps eps = 0 and g = 1 exact in floating point.
inline EquivalentChannel equivalent_channel(const ChannelParams& ch, double g) {
    const double T = ch.transmittance;
    const double eps = ch.excess_noise;
    const double denom = 2.0 + (1.0 - g * g) * T * eps;
    const double eta = 4.0 * g * g * T / (denom * denom);
    const double eps_g = 0.5 * eps * denom;
    const bool physical = eta <= 1.0 + 1e-12 && eps_g >= -1e-12;
    return {eta, eps_g, physical};
}

// Thermal parameter of Bob's conditional state: (1+l^2)/(1-l^2) = 1 + T eps,
// i.e. l^2 = T eps / (2 + T eps). Returns l itself.
inline double lambda_from_noise(const ChannelParams& ch) {
    const double te = ch.transmittance * ch.excess_noise;
    return std::sqrt(te / (2.0 + te));
}

// Post-selected key rate of the modified protocol: rate, mutual information and
// Holevo bound of the equivalent channel, all scaled by P_success so the
// breakdown stays self-consistent. Unphysical mappings (g > g_max) are flagged,
// not thrown, so sweeps can leave those cells blank.
inline KeyRateBreakdown nla_key_rate(const ProtocolParams& p, const ChannelParams& ch,
                                     const NlaParams& nla) {
    const EquivalentChannel eq = equivalent_channel(ch, nla.gain);
    if (!eq.physical) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan, nan, nan, nan, nan, Status::UnphysicalNlaMapping};
    }
    KeyRateBreakdown kr = key_rate(p, ChannelParams{eq.eta, eq.eps_g});
    const double ps = nla.success_probability();
    kr.mutual_information *= ps;
    kr.holevo_bound *= ps;
    kr.rate *= ps;
    return kr;
}

}  // namespace cvqkd
