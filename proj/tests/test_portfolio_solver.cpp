#include <random>

#include "doctest.h"
#include "mmv/portfolio_solver.hpp"
#include "oracles.hpp"

using namespace mmv;
using doctest::Approx;

namespace {

MarketModel market(std::vector<double> p, std::vector<std::vector<double>> gens, double x0) {
    auto s = make_space(std::move(p));
    std::vector<Payoff> g;
    for (auto& v : gens) {
        g.emplace_back(s, v);
    }
    return MarketModel(s, std::move(g), x0);
}

MarketModel two_atom(double x0 = 1.0) { return market({0.5, 0.5}, {{1.0, -1.0}}, x0); }
MarketModel signed_market(double x0 = 0.0) { return market({0.4, 0.4, 0.2}, {{-1.0, 3.0, 10.0}}, x0); }
MarketModel big_jump(double x0 = 0.0) { return market({0.4, 0.4, 0.2}, {{-1.0, 1.0, 10.0}}, x0); }

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an mmv::Error");
    return ErrorKind::InvalidInput;
}

double max_diff(const Payoff& a, const Payoff& b) { return (a.values() - b.values()).lpNorm<Eigen::Infinity>(); }

}  // namespace

TEST_CASE("complete market closed form") {
    auto s = make_space({0.5, 0.5});
    const auto sol = solve_complete_mv(Payoff(s, std::vector<double>{0.5, 1.5}), 1.0, PreferenceParams(1.0));
    CHECK(sol.value == Approx(1.125).epsilon(1e-14));
    CHECK(sol.wealth[0] == Approx(1.75).epsilon(1e-14));
    CHECK(sol.wealth[1] == Approx(0.75).epsilon(1e-14));
    CHECK(0.5 * 0.5 * sol.wealth[0] + 0.5 * 1.5 * sol.wealth[1] == Approx(1.0).epsilon(1e-14));
    REQUIRE(sol.lagrange.has_value());
    CHECK(sol.lagrange->d_star == Approx(1.25).epsilon(1e-14));
    CHECK(sol.lagrange->lambda1 == Approx(1.0).epsilon(1e-14));
    CHECK(sol.lagrange->lambda2 == Approx(1.0).epsilon(1e-14));
    // Same value as a direct MV evaluation of the wealth.
    CHECK(testing::direct_mv(sol.wealth.values(), s->probabilities(), 1.0) == Approx(1.125).epsilon(1e-14));
}

TEST_CASE("complete market: unscaled kernel and limits") {
    auto s = make_space({0.5, 0.5});
    const auto flat = solve_complete_mv(Payoff::constant(s, 1.0), 2.0, PreferenceParams(1.0));
    CHECK(flat.value == 2.0);
    CHECK(flat.wealth[0] == 2.0);
    CHECK(flat.wealth[1] == 2.0);
    CHECK_FALSE(flat.lagrange.has_value());
    // Doubling the raw kernel halves the price of every claim.
    const auto doubled = solve_complete_mv(Payoff(s, std::vector<double>{1.0, 3.0}), 1.0, PreferenceParams(1.0));
    const double budget = 0.5 * 1.0 * doubled.wealth[0] + 0.5 * 3.0 * doubled.wealth[1];
    CHECK(budget == Approx(1.0).epsilon(1e-14));
    CHECK(doubled.value == Approx(testing::direct_mv(doubled.wealth.values(), s->probabilities(), 1.0)).epsilon(1e-14));
    const auto averse = solve_complete_mv(Payoff(s, std::vector<double>{0.5, 1.5}), 1.0, PreferenceParams(1e8));
    CHECK(std::abs(averse.value - 1.0) < 1e-8);
    CHECK(kind_of([&] { solve_complete_mv(Payoff(s, std::vector<double>{0.0, 2.0}), 1.0, PreferenceParams(1.0)); }) ==
          ErrorKind::NonPositiveKernel);
}

TEST_CASE("quadratic hedge") {
    auto m = two_atom(1.0);
    const auto same = solve_quadratic_hedge(m, 1.0);
    CHECK(same[0] == 1.0);
    CHECK(same[1] == 1.0);
    const auto h = solve_quadratic_hedge(m, 2.0);
    CHECK(h[0] == Approx(1.0).epsilon(1e-14));
    CHECK(h[1] == Approx(1.0).epsilon(1e-14));

    auto s = signed_market(1.0);
    const auto hs = solve_quadratic_hedge(s, 2.0);
    // Least-squares oracle: minimize E[(x0 + t f - 2)^2] over t.
    const Vector f = s.generator_matrix().col(0);
    const Vector& p = s.space()->probabilities();
    const double t = p.dot(f) * (2.0 - 1.0) / p.dot(f.cwiseProduct(f));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(hs[i] - (1.0 + t * f[static_cast<Eigen::Index>(i)])) < 1e-8);
    }
}

TEST_CASE("mv: examples") {
    const auto two = solve_mv(two_atom(1.0), PreferenceParams(1.0));
    CHECK(two.value == Approx(1.0).epsilon(1e-14));
    CHECK(two.wealth[0] == Approx(1.0).epsilon(1e-14));

    auto bj = big_jump(0.0);
    const auto sol = solve_mv(bj, PreferenceParams(1.0));
    const double em2 = solve_vsmm(bj).kernel.second_moment();
    CHECK(sol.value == Approx((em2 - 1.0) / 2.0).epsilon(1e-14));
    const Vector& p = bj.space()->probabilities();
    const double brute = testing::grid_polish_max(
        [&](const Vector& t) { return testing::direct_mv(bj.wealth(t).values(), p, 1.0); }, 1);
    CHECK(std::abs(brute - sol.value) < 1e-8);
    CHECK(testing::direct_mv(sol.wealth.values(), p, 1.0) == Approx(sol.value).epsilon(1e-12));
    REQUIRE(sol.lambda_star.has_value());

    const auto doubled = solve_mv(bj, PreferenceParams(2.0));
    CHECK(doubled.value == Approx(sol.value / 2.0).epsilon(1e-14));
    auto shifted = bj.with_x0(3.0);
    CHECK(solve_mv(shifted, PreferenceParams(2.0)).value - 3.0 == Approx(sol.value / 2.0).epsilon(1e-13));
}

TEST_CASE("mmv: examples") {
    auto bj = big_jump(0.0);
    const auto mv = solve_mv(bj, PreferenceParams(1.0));
    const auto mmv = solve_mmv(bj, PreferenceParams(1.0));
    CHECK(max_diff(mv.wealth, mmv.wealth) < 1e-7);
    CHECK(std::abs(mv.value - mmv.value) < 1e-7);

    auto sm = signed_market(0.0);
    const auto smv = solve_mv(sm, PreferenceParams(1.0));
    const auto smmv = solve_mmv(sm, PreferenceParams(1.0));
    CHECK(smmv.value > smv.value);
    CHECK(smmv.value == Approx((1.5625 - 1.0) / 2.0).epsilon(1e-12));
    CHECK(smv.value == Approx((24.0 / 16.16 - 1.0) / 2.0).epsilon(1e-12));
    CHECK(smmv.kappa == Approx(1.5625).epsilon(1e-12));
    CHECK(smmv.wealth[0] == Approx(-0.3125).epsilon(1e-12));
    CHECK(smmv.wealth[1] == Approx(0.9375).epsilon(1e-12));
    CHECK(smmv.wealth[2] == Approx(3.125).epsilon(1e-12));
    CHECK(smmv.duality_residual < 1e-12);
    CHECK(smmv.truncation_residual < 1e-12);
    const auto oracle = testing::enumerate_nonneg_kernel(sm);
    CHECK(smmv.value == Approx((oracle.objective - 1.0) / 2.0).epsilon(1e-12));

    auto empty = market({0.3, 0.7}, {}, 2.5);
    const auto e = solve_mmv(empty, PreferenceParams(1.0));
    CHECK(e.value == Approx(2.5).epsilon(1e-15));
    CHECK(e.wealth[0] == 2.5);
    CHECK(e.wealth[1] == 2.5);
    CHECK(e.strategy.size() == 0);
}

TEST_CASE("consistency check") {
    const auto two = check_consistency(two_atom(1.0), PreferenceParams(1.0));
    CHECK(two.consistent);
    CHECK(two.status == ConsistencyStatus::Consistent);
    CHECK(std::abs(two.gap) <= 1e-10);

    const auto sm = check_consistency(signed_market(0.0), PreferenceParams(1.0));
    CHECK_FALSE(sm.consistent);
    CHECK(sm.status == ConsistencyStatus::Inconsistent);
    CHECK(sm.gap == Approx((1.5625 - 24.0 / 16.16) / 2.0).epsilon(1e-10));
    CHECK(sm.identity_residual < 1e-12);
    CHECK(sm.membership_residual < 1e-12);

    const auto bj = check_consistency(big_jump(0.0), PreferenceParams(1.0));
    CHECK(bj.consistent);
    CHECK(std::abs(bj.gap) <= 1e-10);

    const auto empty = check_consistency(market({0.3, 0.7}, {}, 0.0), PreferenceParams(1.0));
    CHECK(empty.consistent);
    CHECK(to_string(ConsistencyStatus::IndeterminateByTheorem) == "indeterminate_by_theorem");
}

TEST_CASE("bound via kernel") {
    auto two = two_atom(1.0);
    const PreferenceParams one(1.0);
    CHECK(bound_via_kernel(two, Kernel(Payoff::constant(two.space(), 1.0)), one) == Approx(1.0).epsilon(1e-15));

    auto sm = signed_market(0.0);
    const auto mmv = solve_mmv(sm, one);
    CHECK(bound_via_kernel(sm, mmv.kernel_tilde, one) == Approx(mmv.value).epsilon(1e-14));

    // Direction orthogonal to 1 and to the generator; moving along it keeps
    // the martingale constraints and lifts the zero atom of the kernel.
    const Vector& p = sm.space()->probabilities();
    Matrix a(3, 2);
    a.col(0).setOnes();
    a.col(1) = sm.generator_matrix().col(0);
    const Vector z = Vector::Unit(3, 2);
    const Vector d = z - a * (a.transpose() * p.asDiagonal() * a).ldlt().solve(a.transpose() * p.asDiagonal() * z);
    REQUIRE(d[2] > 0.0);
    for (double t : {0.01, 0.1, 0.5}) {
        const Vector q = mmv.kernel_tilde.density().values() + t * d;
        REQUIRE(q.minCoeff() > 0.0);
        CHECK(bound_via_kernel(sm, Kernel(Payoff(sm.space(), q)), one) >= mmv.value);
    }
    const auto vsmm = solve_vsmm(sm);
    CHECK(kind_of([&] { bound_via_kernel(sm, vsmm.kernel, one); }) == ErrorKind::NotAMartingaleDensity);
    CHECK(kind_of([&] { bound_via_kernel(sm, Kernel(Payoff::constant(sm.space(), 1.0)), one); }) ==
          ErrorKind::NotAMartingaleDensity);
    CHECK(kind_of([&] { bound_via_kernel(sm, Kernel(Payoff::constant(two.space(), 1.0)), one); }) ==
          ErrorKind::DimensionMismatch);
}

TEST_CASE("property: sandwich on random attainable payoffs") {
    std::mt19937_64 rng(211);
    std::normal_distribution<double> n01;
    auto corpus = testing::market_corpus(20, 223);
    for (int k = 0; k < 200; ++k) {
        const auto& m = corpus[static_cast<std::size_t>(k) % corpus.size()];
        const PreferenceParams params(k % 3 == 0 ? 0.5 : (k % 3 == 1 ? 1.0 : 2.0));
        Vector t(static_cast<Eigen::Index>(m.strategy_dimension()));
        for (auto& v : t) {
            v = 2.0 * n01(rng);
        }
        const Payoff x = m.wealth(t);
        const auto tilde = solve_nonneg_kernel(m);
        const double u = mv_utility(x, params);
        const double v = mmv_utility(x, params).value;
        const double bound = bound_via_kernel(m, tilde.kernel, params);
        CHECK(u <= v + 1e-9);
        CHECK(v <= bound + 1e-9);
    }
}

TEST_CASE("property: budget identity") {
    std::mt19937_64 rng(227);
    std::normal_distribution<double> n01;
    for (const auto& m : testing::market_corpus(40, 229)) {
        const auto vsmm = solve_vsmm(m);
        for (int k = 0; k < 5; ++k) {
            Vector t(static_cast<Eigen::Index>(m.strategy_dimension()));
            for (auto& v : t) {
                v = 3.0 * n01(rng);
            }
            const Payoff x = m.wealth(t);
            CHECK(std::abs(inner(vsmm.kernel.density(), x) - m.x0()) <= 1e-9 * (1.0 + x.values().lpNorm<1>()));
        }
    }
}

TEST_CASE("property: complete-market coincidence") {
    std::mt19937_64 rng(233);
    std::size_t checked = 0;
    for (int k = 0; k < 30; ++k) {
        std::uniform_int_distribution<std::size_t> atoms(2, 5);
        const std::size_t n = atoms(rng);
        auto m = testing::random_market(rng, n, n - 1, 0.7);
        if (m.rank() != n - 1) {
            continue;
        }
        const auto vsmm = solve_vsmm(m);
        if (vsmm.min_density <= 0.0) {
            continue;
        }
        ++checked;
        const PreferenceParams params(1.5);
        const auto mv = solve_mv(m, params);
        const auto mmv = solve_mmv(m, params);
        const auto cm = solve_complete_mv(vsmm.kernel.density(), m.x0(), params);
        CHECK(max_diff(mv.wealth, mmv.wealth) < 1e-8);
        CHECK(max_diff(mv.wealth, cm.wealth) < 1e-8);
        CHECK(std::abs(mv.value - cm.value) < 1e-8);
    }
    CHECK(checked > 10);
}

TEST_CASE("property: dichotomy and brute force over strategies") {
    std::size_t signed_count = 0;
    for (const auto& m : testing::market_corpus(25, 239)) {
        const Vector& p = m.space()->probabilities();
        for (double theta : {0.5, 2.0}) {
            const PreferenceParams params(theta);
            const auto r = check_consistency(m, params);
            const bool consistent_branch = r.consistent && r.gap <= 1e-8;
            const bool inconsistent_branch = r.vsmm_min < -1e-9 && r.gap > 0.0;
            CHECK(consistent_branch != inconsistent_branch);
            signed_count += inconsistent_branch ? 1 : 0;

            const auto mv = solve_mv(m, params);
            const auto mmv = solve_mmv(m, params);
            CHECK(mmv.duality_residual <= 1e-6);
            CHECK(mmv.truncation_residual <= 1e-8);
            const std::size_t dim = m.strategy_dimension();
            const double u = testing::grid_polish_max(
                [&](const Vector& t) { return testing::direct_mv(m.wealth(t).values(), p, theta); }, dim);
            const double v = testing::grid_polish_max(
                [&](const Vector& t) { return mmv_utility(m.wealth(t), params).value; }, dim);
            CHECK(std::abs(u - mv.value) <= 1e-6);
            CHECK(std::abs(v - mmv.value) <= 1e-6);
        }
    }
    CHECK(signed_count > 4);
}
