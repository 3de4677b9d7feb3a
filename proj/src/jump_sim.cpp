#include "mmv/jump_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <thread>

#include "mmv/errors.hpp"
#include "mmv/philox.hpp"

namespace mmv {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw Error(ErrorKind::InvalidInput, message);
    }
}

// Pairwise summation in index order; result depends only on the data.
double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 64) {
        double s = 0.0;
        for (double v : x) {
            s += v;
        }
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

Estimate sample_estimate(std::span<const double> x) {
    const auto n = static_cast<double>(x.size());
    const double mean = pairwise_sum(x) / n;
    if (x.size() < 2) {
        return {mean, 0.0};
    }
    std::vector<double> dev(x.size());
    std::transform(x.begin(), x.end(), dev.begin(), [mean](double v) { return (v - mean) * (v - mean); });
    const double var = pairwise_sum(dev) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

struct PathResult {
    double kernel = 0.0;
    unsigned sign_flips = 0;
};

class PathSimulator {
public:
    PathSimulator(const JumpDiffusionParams& params, const SimConfig& config, double loading)
        : params_(params), config_(config), loading_(loading),
          dt_(params.horizon() / static_cast<double>(config.n_steps)),
          sqrt_dt_(std::sqrt(dt_)) {
        const double a = loading_;
        const double sigma = params.sigma();
        drift_per_step_ = (-0.5 * a * a * sigma * sigma + a * params.intensity() * params.xi1()) * dt_;
        jump_mean_per_step_ = params.intensity() * dt_;
        double acc = 0.0;
        for (const JumpAtom& atom : params.jump_law()) {
            acc += atom.weight;
            cumulative_.push_back(acc);
        }
    }

    PathResult run(std::size_t path) const {
        StreamRng rng(config_.seed, path);
        const double a = loading_;
        const double vol = a * params_.sigma() * sqrt_dt_;
        double log_continuous = 0.0;
        double jump_factor = 1.0;
        unsigned flips = 0;
        for (std::size_t step = 0; step < config_.n_steps; ++step) {
            log_continuous += drift_per_step_ - vol * rng.normal();
            const unsigned jumps = rng.poisson(jump_mean_per_step_);
            for (unsigned k = 0; k < jumps; ++k) {
                const double factor = 1.0 - a * draw_size(rng);
                if (factor < 0.0) {
                    ++flips;
                }
                jump_factor *= factor;
            }
        }
        return {std::exp(log_continuous) * jump_factor, flips};
    }

private:
    double draw_size(StreamRng& rng) const {
        const double u = rng.uniform();
        const auto& law = params_.jump_law();
        for (std::size_t i = 0; i + 1 < law.size(); ++i) {
            if (u < cumulative_[i]) {
                return law[i].size;
            }
        }
        return law.back().size;
    }

    const JumpDiffusionParams& params_;
    const SimConfig& config_;
    double loading_;
    double dt_;
    double sqrt_dt_;
    double drift_per_step_ = 0.0;
    double jump_mean_per_step_ = 0.0;
    std::vector<double> cumulative_;
};

}  // namespace

JumpDiffusionParams::JumpDiffusionParams(double r, double mu, double sigma, double intensity,
                                         std::vector<JumpAtom> jump_law, double horizon)
    : r_(r), mu_(mu), sigma_(sigma), intensity_(intensity), jump_law_(std::move(jump_law)), horizon_(horizon) {
    require(std::isfinite(r) && std::isfinite(mu) && std::isfinite(sigma) && std::isfinite(intensity) &&
                std::isfinite(horizon),
            "jump-diffusion coefficients must be finite");
    require(sigma >= 0.0, "sigma must be non-negative");
    require(intensity >= 0.0, "jump intensity must be non-negative");
    require(horizon > 0.0, "horizon must be positive");
    require(intensity == 0.0 || !jump_law_.empty(), "positive jump intensity needs a non-empty jump law");
    double total = 0.0;
    for (const JumpAtom& atom : jump_law_) {
        require(std::isfinite(atom.size) && atom.size > -1.0, "jump sizes must be finite and > -1");
        require(std::isfinite(atom.weight) && atom.weight > 0.0, "jump weights must be positive");
        total += atom.weight;
        xi1_ += atom.weight * atom.size;
        xi2_sq_ += atom.weight * atom.size * atom.size;
    }
    if (!jump_law_.empty()) {
        std::ostringstream os;
        os.precision(17);
        os << "jump weights sum to " << total << ", expected 1";
        require(std::abs(total - 1.0) <= 1e-12, os.str());
    }
}

double qbar(const JumpDiffusionParams& params) {
    const double premium = params.risk_premium();
    if (premium == 0.0) {
        throw Error(ErrorKind::ZeroRiskPremium, "mu - r + lambda xi1 = 0: every jump size is admissible");
    }
    return params.total_variance_rate() / premium;
}

double kernel_loading(const JumpDiffusionParams& params) {
    const double variance_rate = params.total_variance_rate();
    if (variance_rate == 0.0) {
        throw Error(ErrorKind::DegenerateMarket, "sigma^2 + lambda xi2^2 = 0: the asset is riskless");
    }
    return params.risk_premium() / variance_rate;
}

SimReport simulate(const JumpDiffusionParams& params, const SimConfig& config, double x0, double theta,
                   std::size_t workers, PathDump* dump) {
    require(config.n_paths >= 1, "n_paths must be >= 1");
    require(config.n_steps >= 1, "n_steps must be >= 1");
    require(std::isfinite(x0), "x0 must be finite");
    require(theta > 0.0 && std::isfinite(theta), "theta must be positive and finite");
    workers = std::max<std::size_t>(1, std::min(workers, config.n_paths));

    const double a = kernel_loading(params);
    const double horizon = params.horizon();

    SimReport report;
    report.kernel_loading = a;
    report.n_paths = config.n_paths;
    report.n_steps = config.n_steps;
    report.seed = config.seed;
    if (params.risk_premium() == 0.0) {
        report.qbar = std::numeric_limits<double>::infinity();
    } else {
        report.qbar = qbar(params);
        if (params.risk_premium() < 0.0) {
            report.warnings.emplace_back("non-positive risk premium: qbar is not a positive threshold");
        }
    }
    if (config.n_steps < 64) {
        report.warnings.emplace_back("step size above horizon/64: use at least 64 steps");
    }

    const double second_moment = std::exp(a * a * params.total_variance_rate() * horizon);
    const double grown = std::exp(params.r() * horizon) * x0;
    report.kernel_second_moment_analytic = second_moment;
    report.budget_target = grown;
    report.mv_value_analytic = grown + (second_moment - 1.0) / (2.0 * theta);

    double flip_weight = 0.0;
    for (const JumpAtom& atom : params.jump_law()) {
        if (1.0 - a * atom.size < 0.0) {
            flip_weight += atom.weight;
        }
    }
    report.expected_frac_negative = 0.5 * (1.0 - std::exp(-2.0 * params.intensity() * flip_weight * horizon));

    const std::size_t n = config.n_paths;
    std::vector<PathResult> results(n);
    const PathSimulator simulator(params, config, a);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            results[i] = simulator.run(i);
        }
    };
    if (workers == 1) {
        work(0, n);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = std::min(n, w * chunk);
            const std::size_t end = std::min(n, begin + chunk);
            pool.emplace_back(work, begin, end);
        }
    }

    std::vector<double> kernel(n), kernel_sq(n), negative(n), budget(n), wealth(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = results[i].kernel;
        const double x = grown + second_moment / theta - m / theta;
        kernel[i] = m;
        kernel_sq[i] = m * m;
        negative[i] = m < 0.0 ? 1.0 : 0.0;
        budget[i] = m * x;
        wealth[i] = x;
        const bool odd = (results[i].sign_flips % 2) == 1;
        if ((m < 0.0) != odd && m != 0.0) {
            ++report.sign_accounting_mismatches;
        }
    }
    report.kernel_mean = sample_estimate(kernel);
    report.kernel_second_moment = sample_estimate(kernel_sq);
    report.budget_check = sample_estimate(budget);

    const double frac = pairwise_sum(negative) / static_cast<double>(n);
    report.frac_negative_kernel = {frac, std::sqrt(frac * (1.0 - frac) / static_cast<double>(n))};

    // MV utility through its influence function X - theta/2 (X - mean)^2.
    const Estimate wealth_est = sample_estimate(wealth);
    std::vector<double> influence(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = wealth[i] - wealth_est.value;
        influence[i] = wealth[i] - 0.5 * theta * d * d;
    }
    const Estimate influence_est = sample_estimate(influence);
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = wealth[i] - wealth_est.value;
        dev[i] = d * d;
    }
    const double var = n > 1 ? pairwise_sum(dev) / static_cast<double>(n - 1) : 0.0;
    report.mv_value_estimate = {wealth_est.value - 0.5 * theta * var, influence_est.std_error};

    if (dump != nullptr) {
        dump->kernel = std::move(kernel);
        dump->wealth = std::move(wealth);
    }
    return report;
}

}  // namespace mmv
