#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

// Covariance matrix violates the bona fide condition beyond rounding tolerance.
class UnphysicalCovarianceError : public std::runtime_error {
  public:
    explicit UnphysicalCovarianceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Fock-space cutoff too small for the requested state.
class TruncationError : public std::runtime_error {
  public:
    explicit TruncationError(const std::string& msg) : std::runtime_error(msg) {}
};

// g^n applied to a state whose photon-number tail decays slower than g^-2n.
class DivergentAmplificationError : public std::runtime_error {
  public:
    explicit DivergentAmplificationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cvqkd
