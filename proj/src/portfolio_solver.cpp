#include "mmv/portfolio_solver.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace mmv {

namespace {

constexpr double kAttainTol = 1e-8;
constexpr double kDualityTol = 1e-6;
constexpr double kValueTol = 1e-7;
constexpr double kMembershipTol = 1e-8;
constexpr int kSampledSpanElements = 10;
constexpr std::uint64_t kMembershipSeed = 0x6d6d762d6c6162ULL;

}  // namespace

std::string_view to_string(ConsistencyStatus status) noexcept {
    switch (status) {
    case ConsistencyStatus::Consistent: return "consistent";
    case ConsistencyStatus::Inconsistent: return "inconsistent";
    case ConsistencyStatus::IndeterminateByTheorem: return "indeterminate_by_theorem";
    }
    return "unknown";
}

MvSolution solve_complete_mv(const Payoff& kernel_raw, double x0, const PreferenceParams& params) {
    if (kernel_raw.min() <= 0.0) {
        throw Error(ErrorKind::NonPositiveKernel, "complete-market pricing kernel must be strictly positive");
    }
    if (!std::isfinite(x0)) {
        throw Error(ErrorKind::InvalidInput, "x0 must be finite");
    }
    const double theta = params.theta();
    const double m1 = expectation(kernel_raw);
    const double m2 = variance(kernel_raw);

    MvSolution out{Payoff::constant(kernel_raw.space(), x0 / m1), Vector(), x0 / m1, std::nullopt, std::nullopt};
    if (m2 == 0.0) {
        return out;
    }
    const double d_star = x0 / m1 + m2 / (theta * m1 * m1);
    Vector w = (d_star + (m1 - kernel_raw.values().array()) / (theta * m1)).matrix();
    out.wealth = Payoff(kernel_raw.space(), std::move(w));
    out.value = x0 / m1 + m2 / (2.0 * theta * m1 * m1);
    const double lambda1 = theta * (d_star * m1 - x0) / m2;
    out.lagrange = LagrangeMultipliers{d_star, lambda1, lambda1 * m1};
    return out;
}

Payoff solve_quadratic_hedge(const MarketModel& market, double lambda_target) {
    if (!std::isfinite(lambda_target)) {
        throw Error(ErrorKind::InvalidInput, "hedge target must be finite");
    }
    const double x0 = market.x0();
    if (lambda_target == x0) {
        return Payoff::constant(market.space(), x0);
    }
    const KernelReport vsmm = solve_vsmm(market);
    const Kernel& m = vsmm.kernel;
    const double y = (lambda_target - x0) / m.second_moment();
    Vector w = (lambda_target - y * m.density().values().array()).matrix();
    return Payoff(market.space(), std::move(w));
}

MvSolution solve_mv(const MarketModel& market, const PreferenceParams& params) {
    const double theta = params.theta();
    const double x0 = market.x0();
    const KernelReport vsmm = solve_vsmm(market);
    const double em2 = vsmm.kernel.second_moment();

    const Vector target = ((em2 - vsmm.kernel.density().values().array()) / theta).matrix();
    Vector strategy = market.least_squares_strategy(target);
    Payoff wealth = market.wealth(strategy);
    const Vector closed_form = (x0 + target.array()).matrix();
    const Vector diff = wealth.values() - closed_form;
    const double residual = std::sqrt(market.space()->inner(diff, diff));
    if (residual > kAttainTol * std::max(1.0, closed_form.lpNorm<Eigen::Infinity>())) {
        std::ostringstream os;
        os << "MV wealth is not replicated by the generators (residual " << residual << ")";
        throw Error(ErrorKind::OptimizerStalled, os.str());
    }
    const double value = x0 + (em2 - 1.0) / (2.0 * theta);
    return MvSolution{std::move(wealth), std::move(strategy), value, std::nullopt, x0 + em2 / theta};
}

MmvSolution solve_mmv(const MarketModel& market, const PreferenceParams& params) {
    const double theta = params.theta();
    const double x0 = market.x0();
    KernelReport tilde = solve_nonneg_kernel(market);
    const double em2 = tilde.kernel.second_moment();
    const double kappa = x0 + em2 / theta;

    Vector target = Vector::Zero(static_cast<Eigen::Index>(market.atoms()));
    if (market.rank() > 0) {
        target = -(market.orthonormal_basis() * tilde.span_multipliers) / theta;
    }
    Vector strategy = market.least_squares_strategy(target);
    Payoff wealth = market.wealth(strategy);

    const Vector shortfall = (kappa - wealth.values().array()).cwiseMax(0.0).matrix();
    const double duality_residual = (tilde.kernel.density().values() - theta * shortfall).lpNorm<Eigen::Infinity>();
    const double truncation_residual = std::abs(market.space()->expectation(shortfall) - 1.0 / theta);
    const double value = x0 + (em2 - 1.0) / (2.0 * theta);
    const double achieved = mmv_utility(wealth, params).value;

    if (duality_residual > kDualityTol || std::abs(achieved - value) > kValueTol) {
        std::ostringstream os;
        os.precision(6);
        os << "MMV wealth fails its certificate: duality residual " << duality_residual << ", value gap "
           << std::abs(achieved - value) << ", kernel KKT residual " << tilde.kkt_residual;
        throw Error(ErrorKind::OptimizerStalled, os.str());
    }
    return MmvSolution{std::move(wealth),    std::move(strategy), value,   kappa, std::move(tilde.kernel),
                       duality_residual,     truncation_residual, achieved};
}

ConsistencyReport check_consistency(const MarketModel& market, const PreferenceParams& params,
                                    double negativity_tol) {
    const double theta = params.theta();
    const KernelReport vsmm = solve_vsmm(market);
    const MvSolution mv = solve_mv(market, params);

    const Vector& xs = mv.wealth.values();
    const Vector test_density = (1.0 - theta * (xs.array() - expectation(mv.wealth))).matrix();

    ConsistencyReport report;
    report.vsmm_min = vsmm.min_density;
    report.mv_value = mv.value;
    report.identity_residual = (test_density - vsmm.kernel.density().values()).lpNorm<Eigen::Infinity>();

    const auto& space = *market.space();
    double membership = martingale_residual(market, test_density);
    std::mt19937_64 rng(kMembershipSeed);
    std::normal_distribution<double> normal;
    const Matrix& basis = market.orthonormal_basis();
    for (int s = 0; s < kSampledSpanElements && basis.cols() > 0; ++s) {
        Vector coeffs(basis.cols());
        for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
            coeffs[j] = normal(rng);
        }
        const Vector gains = basis * coeffs;
        membership = std::max(membership, std::abs(space.inner(test_density, gains)));
        const Vector wealth = (market.x0() + gains.array()).matrix();
        membership = std::max(membership, std::abs(space.inner(test_density, wealth) - market.x0()));
    }
    report.membership_residual = membership;

    const bool non_negative = test_density.minCoeff() >= -negativity_tol;
    const bool is_discount_density = membership <= kMembershipTol;
    if (non_negative && is_discount_density) {
        report.status = ConsistencyStatus::Consistent;
    } else if (!non_negative) {
        report.status = ConsistencyStatus::Inconsistent;
    } else {
        report.status = ConsistencyStatus::IndeterminateByTheorem;
    }
    report.consistent = report.status == ConsistencyStatus::Consistent;

    const MmvSolution mmv = solve_mmv(market, params);
    report.mmv_value = mmv.value;
    report.gap = mmv.value - mv.value;
    return report;
}

double bound_via_kernel(const MarketModel& market, const Kernel& q, const PreferenceParams& params) {
    if (!q.density().space()->same_as(*market.space())) {
        throw Error(ErrorKind::DimensionMismatch, "kernel is not on the market space");
    }
    if (q.min() < -1e-12) {
        throw Error(ErrorKind::NotAMartingaleDensity, "kernel takes negative values");
    }
    const double residual = martingale_residual(market, q.density().values());
    if (residual > 1e-9) {
        std::ostringstream os;
        os << "kernel violates the martingale constraints by " << residual;
        throw Error(ErrorKind::NotAMartingaleDensity, os.str());
    }
    return market.x0() + (q.second_moment() - 1.0) / (2.0 * params.theta());
}

}  // namespace mmv
