#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mmv {

struct JumpAtom {
    double size = 0.0;    // relative jump of the asset, > -1
    double weight = 0.0;  // probability of this size
};

/// Coefficients of the jump-diffusion market
///   dS/S(t-) = mu dt + sigma dB + d(sum of jump sizes),
/// with Poisson jump arrivals at rate `intensity` and a discrete size law.
class JumpDiffusionParams {
public:
    /// Throws InvalidInput on: sigma < 0, intensity < 0, horizon <= 0,
    /// non-finite coefficients, jump sizes <= -1, non-positive weights,
    /// weights not summing to 1 within 1e-12, or an empty law with positive
    /// intensity.
    JumpDiffusionParams(double r, double mu, double sigma, double intensity, std::vector<JumpAtom> jump_law,
                        double horizon);

    double r() const noexcept { return r_; }
    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }
    double intensity() const noexcept { return intensity_; }
    double horizon() const noexcept { return horizon_; }
    const std::vector<JumpAtom>& jump_law() const noexcept { return jump_law_; }

    /// E[Q].
    double xi1() const noexcept { return xi1_; }
    /// E[Q^2].
    double xi2_sq() const noexcept { return xi2_sq_; }
    /// mu - r + intensity * xi1.
    double risk_premium() const noexcept { return mu_ - r_ + intensity_ * xi1_; }
    /// sigma^2 + intensity * xi2^2.
    double total_variance_rate() const noexcept { return sigma_ * sigma_ + intensity_ * xi2_sq_; }

private:
    double r_, mu_, sigma_, intensity_;
    std::vector<JumpAtom> jump_law_;
    double horizon_;
    double xi1_ = 0.0;
    double xi2_sq_ = 0.0;
};

struct SimConfig {
    std::size_t n_paths = 1;
    std::size_t n_steps = 1;
    std::uint64_t seed = 0;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct SimReport {
    Estimate kernel_mean;
    Estimate kernel_second_moment;
    Estimate frac_negative_kernel;
    Estimate budget_check;
    Estimate mv_value_estimate;

    double kernel_second_moment_analytic = 0.0;  // exp(a^2 (sigma^2 + lambda xi2^2) T)
    double budget_target = 0.0;                  // e^{rT} x0
    double mv_value_analytic = 0.0;              // e^{rT} x0 + (E[M^2] - 1)/(2 theta)
    /// Probability of an odd number of jumps with 1 - a q < 0 over [0, T].
    double expected_frac_negative = 0.0;
    /// Paths whose kernel sign disagrees with the parity of their
    /// sign-flipping jump count (0 unless the simulation is broken).
    std::size_t sign_accounting_mismatches = 0;
    double qbar = 0.0;
    double kernel_loading = 0.0;

    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

/// Per-path terminal values, filled on request.
struct PathDump {
    std::vector<double> kernel;
    std::vector<double> wealth;
};

/// Jump-size threshold (sigma^2 + lambda xi2^2) / (mu - r + lambda xi1) at
/// which a jump drives the pricing kernel to zero.
/// Throws ZeroRiskPremium when the denominator vanishes.
double qbar(const JumpDiffusionParams& params);

/// Common loading a = (mu - r + lambda xi1) / (sigma^2 + lambda xi2^2) of the
/// kernel on sigma dB and on compensated jumps; a * qbar = 1.
/// Throws DegenerateMarket when sigma^2 + lambda xi2^2 = 0.
double kernel_loading(const JumpDiffusionParams& params);

/// Monte Carlo of the MV pricing kernel M(T) and the MV-optimal wealth
///   X(T) = e^{rT} x0 + E[M(T)^2]/theta - M(T)/theta.
///
/// Between jumps the kernel evolves by its exact Brownian exponential on
/// each grid step; every jump multiplies it by 1 - a q. Path i draws from
/// its own counter-based stream keyed by (seed, i), and all sums run in path
/// order, so the report is bit-identical for any `workers` >= 1.
SimReport simulate(const JumpDiffusionParams& params, const SimConfig& config, double x0, double theta,
                   std::size_t workers = 1, PathDump* dump = nullptr);

}  // namespace mmv
