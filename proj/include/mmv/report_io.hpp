#pragma once

#include <string>

#include "json.hpp"

#include "mmv/jump_sim.hpp"
#include "mmv/portfolio_solver.hpp"
#include "mmv/preference_engine.hpp"
#include "mmv/scenario_market.hpp"

namespace mmv {

inline constexpr int kSchemaVersion = 1;

/// Market file:
///   { "schema": 1, "probabilities": [..], "generators": [[..], ..], "x0": r }
/// "schema" is optional on input but must be 1 when present. Probabilities
/// are accepted when they sum to 1 within 1e-9 and are then rescaled to sum
/// to 1 exactly. Throws InvalidInput on schema violations.
MarketModel market_from_json(const nlohmann::json& j);

/// Payoff file: { "schema": 1, "probabilities": [..], "payoff": [..] }.
Payoff payoff_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);

/// Rounds to 12 significant digits, the precision of every emitted number.
double round12(double x);

nlohmann::json to_json(const Payoff& x);
nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const MvSolution& s);
nlohmann::json to_json(const MmvSolution& s);
nlohmann::json to_json(const ConsistencyReport& r);
nlohmann::json to_json(const SimReport& r);

/// Serialized form of every report: two-space indentation, sorted keys.
std::string dump_report(const nlohmann::json& j);

}  // namespace mmv
