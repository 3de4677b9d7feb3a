#pragma once

#include "mmv/kernel_solver.hpp"
#include "mmv/scenario_market.hpp"

namespace mmv {

/// Uncertainty-aversion coefficient of the MV and MMV preferences.
class PreferenceParams {
public:
    /// Throws InvalidInput unless theta is positive and finite.
    explicit PreferenceParams(double theta);
    double theta() const noexcept { return theta_; }

private:
    double theta_;
};

struct MmvEvaluation {
    double value = 0.0;
    Kernel minimizer;
    /// Root c of E[(c - X)^+] = 1/theta; the minimizing density is
    /// theta * (c - X)^+.
    double truncation_level = 0.0;
    /// E[(dQ/dP)^2] - 1 of the minimizer.
    double gini_index = 0.0;
};

/// E[X] - theta/2 Var[X].
double mv_utility(const Payoff& x, const PreferenceParams& params);

/// Monotone mean-variance utility
///   inf { E[X Y] + (E[Y^2] - 1) / (2 theta) : Y >= 0, E[Y] = 1 },
/// evaluated through the pointwise minimizer Y = theta (c - X)^+.
MmvEvaluation mmv_utility(const Payoff& x, const PreferenceParams& params);

/// E[X q] + (E[q^2] - 1) / (2 theta) for a fixed non-negative density q.
/// Throws NegativeDensity if q has entries below -1e-12.
double penalized_expectation(const Payoff& x, const Kernel& q, const PreferenceParams& params);

struct DomainCheck {
    bool in_domain = false;
    /// max(X - E[X]) - 1/theta.
    double excess = 0.0;
};

/// Membership in { X : X - E[X] <= 1/theta }, where MV is monotone.
DomainCheck monotone_domain_check(const Payoff& x, const PreferenceParams& params);

/// Unique c with E[(c - X)^+] = target, target > 0. Exposed for testing.
double truncation_root(const Payoff& x, double target);

}  // namespace mmv
