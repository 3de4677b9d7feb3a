#pragma once

#include <optional>
#include <string_view>

#include "mmv/kernel_solver.hpp"
#include "mmv/preference_engine.hpp"
#include "mmv/scenario_market.hpp"

namespace mmv {

/// Multipliers of the complete-market Lagrangian with the auxiliary mean
/// constraint E[X] = d.
struct LagrangeMultipliers {
    double d_star = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

struct MvSolution {
    Payoff wealth;
    /// Generator coefficients; empty for the complete-market closed form.
    Vector strategy;
    double value = 0.0;
    /// Complete-market case with Var[M] > 0 only.
    std::optional<LagrangeMultipliers> lagrange;
    /// Optimal target of the quadratic hedge, x0 + E[M^2]/theta (market case).
    std::optional<double> lambda_star;
};

struct MmvSolution {
    Payoff wealth;
    Vector strategy;
    /// x0 + (E[M~^2] - 1) / (2 theta).
    double value = 0.0;
    /// Truncation level x0 + E[M~^2]/theta.
    double kappa = 0.0;
    Kernel kernel_tilde;
    /// max |M~ - theta (X* - kappa)^-|.
    double duality_residual = 0.0;
    /// |E[(X* - kappa)^-] - 1/theta|.
    double truncation_residual = 0.0;
    /// MMV utility of the constructed wealth, evaluated independently.
    double achieved_value = 0.0;
};

enum class ConsistencyStatus { Consistent, Inconsistent, IndeterminateByTheorem };

std::string_view to_string(ConsistencyStatus status) noexcept;

struct ConsistencyReport {
    double vsmm_min = 0.0;
    bool consistent = false;
    double mv_value = 0.0;
    double mmv_value = 0.0;
    double gap = 0.0;
    ConsistencyStatus status = ConsistencyStatus::Inconsistent;
    /// max |(1 - theta (X* - E[X*])) - M|.
    double identity_residual = 0.0;
    /// Largest violation of E[K] = 1, E[K f] = 0, E[K X] = x0 over the
    /// basis and sampled attainable payoffs.
    double membership_residual = 0.0;
};

/// Closed-form MV optimum when a single strictly positive pricing kernel
/// prices every claim. A constant kernel yields the riskless wealth x0/E[M]
/// and no multipliers.
MvSolution solve_complete_mv(const Payoff& kernel_raw, double x0, const PreferenceParams& params);

/// Minimizer of E[(X - lambda)^2] over attainable wealth,
/// lambda - (lambda - x0) / E[M^2] * M with M the VSMM.
Payoff solve_quadratic_hedge(const MarketModel& market, double lambda_target);

/// MV optimum x0 + E[M^2]/theta - M/theta.
MvSolution solve_mv(const MarketModel& market, const PreferenceParams& params);

/// MMV optimum. The value is certified by the non-negative kernel M~; the
/// wealth x0 - (1/theta) sum_j mu_j b_j is built from the span multipliers of
/// the kernel problem, so that M~ = theta (X* - kappa)^- holds atom by atom.
/// Throws OptimizerStalled if the certificate cannot be met.
MmvSolution solve_mmv(const MarketModel& market, const PreferenceParams& params);

/// Decides MV/MMV consistency through the test density
/// 1 - theta (X* - E[X*]) and reports both optimal values.
ConsistencyReport check_consistency(const MarketModel& market, const PreferenceParams& params,
                                    double negativity_tol = 1e-9);

/// Constant value x0 + (E[q^2] - 1)/(2 theta) of the penalized expectation
/// over attainable wealth, an upper bound on the MMV value.
/// Throws NotAMartingaleDensity unless q is non-negative and satisfies the
/// martingale constraints within 1e-9.
double bound_via_kernel(const MarketModel& market, const Kernel& q, const PreferenceParams& params);

}  // namespace mmv
