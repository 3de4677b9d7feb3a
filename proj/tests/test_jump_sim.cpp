#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "mmv/errors.hpp"
#include "mmv/jump_sim.hpp"
#include "mmv/philox.hpp"

using namespace mmv;
using doctest::Approx;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an mmv::Error");
    return ErrorKind::InvalidInput;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

bool same_estimate(const Estimate& a, const Estimate& b) {
    return same_bits(a.value, b.value) && same_bits(a.std_error, b.std_error);
}

bool identical(const SimReport& a, const SimReport& b) {
    return same_estimate(a.kernel_mean, b.kernel_mean) &&
           same_estimate(a.kernel_second_moment, b.kernel_second_moment) &&
           same_estimate(a.frac_negative_kernel, b.frac_negative_kernel) &&
           same_estimate(a.budget_check, b.budget_check) && same_estimate(a.mv_value_estimate, b.mv_value_estimate) &&
           a.sign_accounting_mismatches == b.sign_accounting_mismatches;
}

// Upper atom q solving q = ratio * qbar for the law {-0.1: 0.9, q: 0.1},
// smaller root of the quadratic obtained by clearing denominators.
double self_consistent_atom(double premium, double sigma, double lambda, double ratio) {
    const double a2 = ratio * lambda * 0.1 - lambda * 0.1;
    const double a1 = -(premium - lambda * 0.09);
    const double a0 = ratio * (sigma * sigma + lambda * 0.009);
    return (-a1 - std::sqrt(a1 * a1 - 4.0 * a2 * a0)) / (2.0 * a2);
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::block(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::block(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::block(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("stream rng moments") {
    StreamRng rng(7, 3);
    const int n = 200000;
    double su = 0.0, sn = 0.0, sn2 = 0.0, sp = 0.0;
    double umin = 1.0, umax = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        sp += rng.poisson(0.7);
    }
    CHECK(umin > 0.0);
    CHECK(umax < 1.0);
    CHECK(std::abs(su / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sn / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(sp / n - 0.7) < 4.0 * std::sqrt(0.7 / n));
    CHECK(StreamRng(7, 4).uniform() != StreamRng(7, 3).uniform());
    CHECK(StreamRng(8, 3).uniform() != StreamRng(7, 3).uniform());
    CHECK(StreamRng(7, 3).poisson(0.0) == 0u);
}

TEST_CASE("parameter validation") {
    CHECK(kind_of([] { JumpDiffusionParams(0, 0.1, -0.2, 0, {}, 1); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([] { JumpDiffusionParams(0, 0.1, 0.2, -1, {}, 1); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([] { JumpDiffusionParams(0, 0.1, 0.2, 0, {}, 0); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([] { JumpDiffusionParams(0, 0.1, 0.2, 1, {}, 1); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([] { JumpDiffusionParams(0, 0.1, 0.2, 1, {{-1.0, 1.0}}, 1); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([] { JumpDiffusionParams(0, 0.1, 0.2, 1, {{0.1, 0.5}, {0.2, 0.4}}, 1); }) ==
          ErrorKind::InvalidInput);
    CHECK(kind_of([] { JumpDiffusionParams(0, 0.1, 0.2, 1, {{0.1, 0.0}, {0.2, 1.0}}, 1); }) ==
          ErrorKind::InvalidInput);
    const JumpDiffusionParams ok(0.01, 0.1, 0.2, 2.0, {{-0.1, 0.25}, {0.3, 0.75}}, 2.0);
    CHECK(ok.xi1() == Approx(0.2));
    CHECK(ok.xi2_sq() == Approx(0.0025 + 0.0675));
    CHECK(ok.risk_premium() == Approx(0.09 + 0.4));
}

TEST_CASE("threshold and loading") {
    const JumpDiffusionParams a(0.0, 0.04, 0.2, 0.0, {}, 1.0);
    CHECK(qbar(a) == Approx(1.0).epsilon(1e-14));
    CHECK(kernel_loading(a) == Approx(1.0).epsilon(1e-14));
    const JumpDiffusionParams b(0.01, 0.10, 0.3, 0.0, {}, 1.0);
    CHECK(qbar(b) == Approx(1.0).epsilon(1e-14));
    const JumpDiffusionParams c(0.0, 0.08, 0.2, 1.0, {{0.2, 0.5}, {-0.2, 0.5}}, 1.0);
    CHECK(c.xi1() == Approx(0.0));
    CHECK(c.xi2_sq() == Approx(0.04));
    CHECK(kernel_loading(c) == Approx(1.0).epsilon(1e-14));
    CHECK(kind_of([] { qbar(JumpDiffusionParams(0.05, 0.05, 0.2, 0.0, {}, 1.0)); }) == ErrorKind::ZeroRiskPremium);
    CHECK(kind_of([] { kernel_loading(JumpDiffusionParams(0.0, 0.05, 0.0, 0.0, {}, 1.0)); }) ==
          ErrorKind::DegenerateMarket);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 0.5);
    for (int k = 0; k < 100; ++k) {
        const JumpDiffusionParams p(0.0, u(rng), u(rng), u(rng), {{u(rng) - 0.3, 0.4}, {u(rng), 0.6}}, 1.0);
        if (p.risk_premium() != 0.0) {
            CHECK(kernel_loading(p) * qbar(p) == Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("pure diffusion never produces negative kernels") {
    const JumpDiffusionParams p(0.01, 0.09, 0.2, 0.0, {}, 1.0);
    const auto r = simulate(p, {20000, 64, 1}, 1.0, 1.0);
    CHECK(r.frac_negative_kernel.value == 0.0);
    CHECK(r.expected_frac_negative == 0.0);
    CHECK(std::abs(r.kernel_mean.value - 1.0) <= 3.0 * r.kernel_mean.std_error);
    CHECK(std::abs(r.budget_check.value - r.budget_target) <= 3.0 * r.budget_check.std_error);
    CHECK(r.budget_target == Approx(std::exp(0.01)).epsilon(1e-15));
    CHECK(r.warnings.empty());
}

TEST_CASE("jumps below the threshold keep the kernel positive") {
    const JumpDiffusionParams p(0.0, 0.08, 0.2, 1.0, {{-0.1, 0.5}, {0.1, 0.5}}, 1.0);
    REQUIRE(0.1 < qbar(p));
    const auto r = simulate(p, {20000, 64, 2}, 1.0, 1.0);
    CHECK(r.frac_negative_kernel.value == 0.0);
    CHECK(r.sign_accounting_mismatches == 0);
    CHECK(std::abs(r.kernel_mean.value - 1.0) <= 3.0 * r.kernel_mean.std_error);
    CHECK(std::abs(r.kernel_second_moment.value - r.kernel_second_moment_analytic) <=
          3.0 * r.kernel_second_moment.std_error);
}

TEST_CASE("an atom above the threshold produces sign flips at the parity rate") {
    const double q = self_consistent_atom(0.3, 0.2, 1.0, 1.5);
    const JumpDiffusionParams p(0.0, 0.3, 0.2, 1.0, {{-0.1, 0.9}, {q, 0.1}}, 1.0);
    CHECK(q / qbar(p) == Approx(1.5).epsilon(1e-12));
    const auto r = simulate(p, {40000, 64, 3}, 1.0, 1.0);
    CHECK(r.expected_frac_negative == Approx(0.5 * (1.0 - std::exp(-0.2))).epsilon(1e-14));
    CHECK(r.frac_negative_kernel.value > 0.0);
    CHECK(std::abs(r.frac_negative_kernel.value - r.expected_frac_negative) <= 3.0 * r.frac_negative_kernel.std_error);
    // At-least-one-jump probability bounds the parity rate from above.
    CHECK(r.expected_frac_negative <= 1.0 - std::exp(-0.1));
    CHECK(r.sign_accounting_mismatches == 0);
    CHECK(std::abs(r.kernel_mean.value - 1.0) <= 3.0 * r.kernel_mean.std_error);
    CHECK(std::abs(r.budget_check.value - r.budget_target) <= 3.0 * r.budget_check.std_error);
}

TEST_CASE("second moment of the kernel against independent references") {
    const JumpDiffusionParams p(0.0, 0.1, 0.2, 2.0, {{-0.15, 0.3}, {0.05, 0.5}, {0.25, 0.2}}, 0.5);
    const double a = kernel_loading(p);
    const double lt = p.intensity() * p.horizon();
    // Compound-Poisson series for E[prod (1 - a q)^2] with the continuous part in closed form.
    double jump_sq = 0.0;
    for (const auto& atom : p.jump_law()) {
        jump_sq += atom.weight * (1.0 - a * atom.size) * (1.0 - a * atom.size);
    }
    double series = 0.0;
    double term = std::exp(-lt);
    for (int k = 0; k < 200; ++k) {
        series += term * std::pow(jump_sq, k);
        term *= lt / (k + 1);
    }
    const double via_series = std::exp(a * a * p.sigma() * p.sigma() * p.horizon()) *
                              std::exp(2.0 * a * p.intensity() * p.xi1() * p.horizon()) * series;
    const auto r = simulate(p, {50000, 64, 11}, 0.0, 1.0);
    CHECK(r.kernel_second_moment_analytic == Approx(via_series).epsilon(1e-12));

    // Terminal-law sampling with a different generator.
    std::mt19937_64 eng(12345);
    std::normal_distribution<double> z;
    std::poisson_distribution<int> count(lt);
    std::discrete_distribution<int> pick({0.3, 0.5, 0.2});
    const int n = 400000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double m = std::exp(-a * p.sigma() * std::sqrt(p.horizon()) * z(eng) -
                            0.5 * a * a * p.sigma() * p.sigma() * p.horizon() + a * p.intensity() * p.xi1() * p.horizon());
        for (int k = count(eng); k > 0; --k) {
            m *= 1.0 - a * p.jump_law()[static_cast<std::size_t>(pick(eng))].size;
        }
        s1 += m * m;
        s2 += m * m * m * m;
    }
    const double mean = s1 / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - r.kernel_second_moment_analytic) <= 4.0 * se);
    CHECK(std::abs(r.kernel_second_moment.value - r.kernel_second_moment_analytic) <=
          3.0 * r.kernel_second_moment.std_error);
}

TEST_CASE("mv value estimate") {
    const JumpDiffusionParams p(0.02, 0.1, 0.25, 0.5, {{-0.2, 0.5}, {0.1, 0.5}}, 1.0);
    const auto r = simulate(p, {50000, 64, 17}, 2.0, 1.5);
    CHECK(r.mv_value_analytic ==
          Approx(std::exp(0.02) * 2.0 + (r.kernel_second_moment_analytic - 1.0) / 3.0).epsilon(1e-14));
    CHECK(std::abs(r.mv_value_estimate.value - r.mv_value_analytic) <= 4.0 * r.mv_value_estimate.std_error);
}

TEST_CASE("reproducibility across runs and worker counts") {
    const JumpDiffusionParams p(0.0, 0.3, 0.2, 1.0, {{-0.1, 0.9}, {0.5, 0.1}}, 1.0);
    const SimConfig cfg{5003, 64, 99};
    const auto base = simulate(p, cfg, 1.0, 1.0, 1);
    CHECK(identical(base, simulate(p, cfg, 1.0, 1.0, 1)));
    for (std::size_t workers : {2u, 3u, 8u, 64u}) {
        CHECK(identical(base, simulate(p, cfg, 1.0, 1.0, workers)));
    }
    CHECK_FALSE(identical(base, simulate(p, {5003, 64, 100}, 1.0, 1.0, 1)));
    PathDump dump;
    simulate(p, cfg, 1.0, 1.0, 4, &dump);
    CHECK(dump.kernel.size() == 5003);
    CHECK(dump.wealth.size() == 5003);
}

TEST_CASE("warnings and simulation input errors") {
    const JumpDiffusionParams p(0.0, 0.08, 0.2, 0.0, {}, 1.0);
    CHECK(simulate(p, {100, 8, 1}, 1.0, 1.0).warnings.size() == 1);
    const JumpDiffusionParams neg(0.1, 0.05, 0.2, 0.0, {}, 1.0);
    CHECK(simulate(neg, {100, 64, 1}, 1.0, 1.0).warnings.size() == 1);
    CHECK(kind_of([&] { simulate(p, {0, 64, 1}, 1.0, 1.0); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([&] { simulate(p, {10, 0, 1}, 1.0, 1.0); }) == ErrorKind::InvalidInput);
    CHECK(kind_of([&] { simulate(p, {10, 64, 1}, 1.0, 0.0); }) == ErrorKind::InvalidInput);
    const JumpDiffusionParams flat(0.0, 0.05, 0.0, 0.0, {}, 1.0);
    CHECK(kind_of([&] { simulate(flat, {10, 64, 1}, 1.0, 1.0); }) == ErrorKind::DegenerateMarket);
}
