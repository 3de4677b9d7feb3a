#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmv {

enum class ErrorKind {
    InvalidInput,
    DimensionMismatch,
    InfeasibleConstraints,
    InfeasibleQP,
    ZeroMeanKernel,
    NonPositiveKernel,
    NegativeDensity,
    NotAMartingaleDensity,
    OptimizerStalled,
    ZeroRiskPremium,
    DegenerateMarket,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so that front ends can
// map it to an exit status without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // True for failures that describe the model itself (infeasible market,
    // missing martingale density) rather than malformed input.
    bool is_model_error() const noexcept;

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InfeasibleConstraints: return "InfeasibleConstraints";
    case ErrorKind::InfeasibleQP: return "InfeasibleQP";
    case ErrorKind::ZeroMeanKernel: return "ZeroMeanKernel";
    case ErrorKind::NonPositiveKernel: return "NonPositiveKernel";
    case ErrorKind::NegativeDensity: return "NegativeDensity";
    case ErrorKind::NotAMartingaleDensity: return "NotAMartingaleDensity";
    case ErrorKind::OptimizerStalled: return "OptimizerStalled";
    case ErrorKind::ZeroRiskPremium: return "ZeroRiskPremium";
    case ErrorKind::DegenerateMarket: return "DegenerateMarket";
    }
    return "Unknown";
}

inline bool Error::is_model_error() const noexcept {
    switch (kind_) {
    case ErrorKind::InfeasibleConstraints:
    case ErrorKind::InfeasibleQP:
    case ErrorKind::OptimizerStalled:
    case ErrorKind::ZeroRiskPremium:
    case ErrorKind::DegenerateMarket:
        return true;
    default:
        return false;
    }
}

}  // namespace mmv
