#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

namespace mmv::cli {

enum class Command { SolveMv, SolveMmv, CheckConsistency, EvalPreference, SimulateJump };
enum class OutputFormat { Json, Csv, Table };

struct JumpOptions {
    double r = 0.0;
    double mu = 0.08;
    double sigma = 0.2;
    double intensity = 0.0;
    std::string jumps;  // "q:w,q:w"
    double horizon = 1.0;
    std::size_t paths = 100000;
    std::size_t steps = 64;
    std::uint64_t seed = 20240901;
};

struct RunConfig {
    Command command = Command::CheckConsistency;
    std::string input_path;
    double theta = 1.0;
    std::optional<double> x0;
    /// Threshold below which a density counts as signed (default -1e-9).
    std::optional<double> negativity_tol;
    OutputFormat output_format = OutputFormat::Json;
    JumpOptions jump;
    std::optional<std::string> paths_csv;
    std::optional<std::size_t> threads;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitModelError = 2;

/// Parses command-line arguments (without the program name) and runs the
/// command. Reports go to `out`, diagnostics to `err`; the return value is
/// the process exit status.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Runs an already parsed configuration. Throws mmv::Error on failure.
void execute(const RunConfig& config, std::ostream& out);

/// Worker count for simulations: the requested count (or the hardware
/// concurrency) capped by MMV_LAB_THREADS when set.
std::size_t simulation_workers(std::optional<std::size_t> requested);

}  // namespace mmv::cli
