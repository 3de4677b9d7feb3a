#pragma once

#include <cstddef>

#include "mmv/scenario_market.hpp"

namespace mmv {

/// Unit-mean density on a scenario space. May be signed.
class Kernel {
public:
    /// Throws InvalidInput when |E[density] - 1| > 1e-9.
    explicit Kernel(Payoff density);

    const Payoff& density() const noexcept { return density_; }
    double second_moment() const noexcept { return second_moment_; }
    double min() const { return density_.min(); }

private:
    Payoff density_;
    double second_moment_;
};

struct KernelReport {
    Kernel kernel;
    double min_density = 0.0;
    double kkt_residual = 0.0;
    std::size_t active_set_size = 0;
    /// Multipliers of the constraints E[g] = 1 and E[g b_j] = 0, where b_j is
    /// the market's orthonormal basis: the unconstrained optimum is
    /// constant_multiplier + sum_j span_multipliers_j * b_j, and the
    /// non-negative one is the positive part of that combination.
    double constant_multiplier = 0.0;
    Vector span_multipliers;
};

/// Variance-optimal signed martingale density: argmin E[g^2] subject to
/// E[g] = 1 and E[g f] = 0 for f in the generator span.
///
/// Throws InfeasibleConstraints when the constant payoff lies in the
/// generator span; the message carries the replicating strategy.
KernelReport solve_vsmm(const MarketModel& market);

/// Variance-optimal non-negative martingale density: same problem as
/// solve_vsmm with the extra constraint g >= 0.
///
/// Solved as a semismooth Newton iteration on the concave dual (each step
/// solves the equality-constrained subproblem on the current free set),
/// with exhaustive active-set enumeration as fallback for up to 20 atoms.
/// Throws InfeasibleQP when no non-negative martingale density exists.
KernelReport solve_nonneg_kernel(const MarketModel& market);

struct NormalizedKernel {
    Kernel kernel;
    double m1 = 0.0;  // E[raw]
    double m2 = 0.0;  // Var[raw]
};

/// Turns an un-normalized pricing kernel into a unit-mean density.
/// Throws ZeroMeanKernel when E[raw] is zero.
NormalizedKernel normalize(const Payoff& raw_kernel);

/// Largest violation of the martingale constraints E[q] = 1 and E[q b_j] = 0
/// over the market's orthonormal basis.
double martingale_residual(const MarketModel& market, const Vector& density);

}  // namespace mmv
