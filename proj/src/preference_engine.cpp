#include "mmv/preference_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace mmv {

PreferenceParams::PreferenceParams(double theta) : theta_(theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) {
        throw Error(ErrorKind::InvalidInput, "theta must be positive and finite");
    }
}

double mv_utility(const Payoff& x, const PreferenceParams& params) {
    return expectation(x) - 0.5 * params.theta() * variance(x);
}

double truncation_root(const Payoff& x, double target) {
    if (!(target > 0.0)) {
        throw Error(ErrorKind::InvalidInput, "truncation target must be positive");
    }
    const Vector& v = x.values();
    const Vector& p = x.space()->probabilities();
    const std::size_t n = x.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return v[static_cast<Eigen::Index>(a)] < v[static_cast<Eigen::Index>(b)];
    });
    std::vector<double> sorted(n), cum_p(n), cum_px(n);
    double acc_p = 0.0, acc_px = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(order[k]);
        sorted[k] = v[i];
        acc_p += p[i];
        acc_px += p[i] * v[i];
        cum_p[k] = acc_p;
        cum_px[k] = acc_px;
    }
    // phi(c) = E[(c - X)^+] is piecewise linear with kinks at the atoms:
    // on [x_(k), x_(k+1)] it equals cum_p[k] c - cum_px[k].
    auto phi_at_atom = [&](std::size_t k) { return cum_p[k] * sorted[k] - cum_px[k]; };

    // phi(x_(0)) = 0 < target; the right end of the bracket is max X + target.
    std::size_t lo = 0, hi = n;
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (phi_at_atom(mid) <= target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double c = (target + cum_px[lo]) / cum_p[lo];
    // Clamp rounding drift back into the bracketing segment.
    c = std::max(c, sorted[lo]);
    if (hi < n) {
        c = std::min(c, sorted[hi]);
    }
    return c;
}

MmvEvaluation mmv_utility(const Payoff& x, const PreferenceParams& params) {
    const double theta = params.theta();
    const double c = truncation_root(x, 1.0 / theta);
    Vector y = (theta * (c - x.values().array())).cwiseMax(0.0).matrix();
    Kernel minimizer{Payoff(x.space(), std::move(y))};
    const double gini = minimizer.second_moment() - 1.0;
    const double value = x.space()->inner(x.values(), minimizer.density().values()) + gini / (2.0 * theta);
    return MmvEvaluation{value, std::move(minimizer), c, gini};
}

double penalized_expectation(const Payoff& x, const Kernel& q, const PreferenceParams& params) {
    require_same_space(x, q.density());
    if (q.min() < -1e-12) {
        throw Error(ErrorKind::NegativeDensity, "penalized expectation needs a non-negative density");
    }
    return inner(x, q.density()) + (q.second_moment() - 1.0) / (2.0 * params.theta());
}

DomainCheck monotone_domain_check(const Payoff& x, const PreferenceParams& params) {
    const double excess = (x.max() - expectation(x)) - 1.0 / params.theta();
    return DomainCheck{excess <= 1e-12, excess};
}

}  // namespace mmv
