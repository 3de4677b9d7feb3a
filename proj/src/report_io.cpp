#include "mmv/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace mmv {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& message) {
    throw Error(ErrorKind::InvalidInput, "schema: " + message);
}

void check_schema_version(const json& j) {
    if (!j.is_object()) {
        schema_error("top level must be a JSON object");
    }
    if (j.contains("schema")) {
        if (!j["schema"].is_number_integer() || j["schema"].get<int>() != kSchemaVersion) {
            schema_error("unsupported \"schema\" version, expected 1");
        }
    }
}

std::vector<double> number_array(const json& j, const std::string& field) {
    if (!j.is_array()) {
        schema_error("\"" + field + "\" must be an array of numbers");
    }
    std::vector<double> out;
    out.reserve(j.size());
    for (const json& v : j) {
        if (!v.is_number()) {
            schema_error("\"" + field + "\" must contain only numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

const json& required(const json& j, const char* field) {
    if (!j.contains(field)) {
        schema_error(std::string("missing field \"") + field + "\"");
    }
    return j[field];
}

SpacePtr space_from_json(const json& j) {
    std::vector<double> p = number_array(required(j, "probabilities"), "probabilities");
    double total = 0.0;
    for (double v : p) {
        total += v;
    }
    if (!(std::abs(total - 1.0) <= 1e-9)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", total);
        throw Error(ErrorKind::InvalidInput, std::string("probabilities sum to ") + buf + ", expected 1 within 1e-9");
    }
    for (double& v : p) {
        v /= total;
    }
    return make_space(std::move(p), 1e-12);
}

}  // namespace

MarketModel market_from_json(const json& j) {
    check_schema_version(j);
    SpacePtr space = space_from_json(j);
    std::vector<Payoff> generators;
    if (j.contains("generators")) {
        const json& g = j["generators"];
        if (!g.is_array()) {
            schema_error("\"generators\" must be an array of arrays");
        }
        for (std::size_t k = 0; k < g.size(); ++k) {
            generators.emplace_back(space, number_array(g[k], "generators[" + std::to_string(k) + "]"));
        }
    }
    const json& x0 = required(j, "x0");
    if (!x0.is_number()) {
        schema_error("\"x0\" must be a number");
    }
    return MarketModel(space, std::move(generators), x0.get<double>());
}

Payoff payoff_from_json(const json& j) {
    check_schema_version(j);
    SpacePtr space = space_from_json(j);
    return Payoff(space, number_array(required(j, "payoff"), "payoff"));
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::InvalidInput, "cannot open input file '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidInput, "malformed JSON in '" + path + "': " + e.what());
    }
}

double round12(double x) {
    if (!std::isfinite(x)) {
        return x;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

json to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(round12(v[i]));
    }
    return out;
}

json to_json(const Payoff& x) { return to_json(x.values()); }

json to_json(const MvSolution& s) {
    json out{{"value", round12(s.value)}, {"wealth", to_json(s.wealth)}, {"strategy", to_json(s.strategy)}};
    if (s.lambda_star) {
        out["lambda_star"] = round12(*s.lambda_star);
    }
    if (s.lagrange) {
        out["lagrange"] = {{"d_star", round12(s.lagrange->d_star)},
                           {"lambda1", round12(s.lagrange->lambda1)},
                           {"lambda2", round12(s.lagrange->lambda2)}};
    }
    return out;
}

json to_json(const MmvSolution& s) {
    return json{{"value", round12(s.value)},
                {"wealth", to_json(s.wealth)},
                {"strategy", to_json(s.strategy)},
                {"kappa", round12(s.kappa)},
                {"duality_residual", round12(s.duality_residual)},
                {"truncation_residual", round12(s.truncation_residual)},
                {"achieved_value", round12(s.achieved_value)},
                {"kernel_tilde", to_json(s.kernel_tilde.density())}};
}

json to_json(const ConsistencyReport& r) {
    return json{{"consistent", r.consistent},
                {"status", std::string(to_string(r.status))},
                {"vsmm_min", round12(r.vsmm_min)},
                {"gap", round12(r.gap)},
                {"mv_value", round12(r.mv_value)},
                {"mmv_value", round12(r.mmv_value)},
                {"identity_residual", round12(r.identity_residual)},
                {"membership_residual", round12(r.membership_residual)}};
}

namespace {

json estimate_json(const Estimate& e) {
    return json{{"value", round12(e.value)}, {"std_error", round12(e.std_error)}};
}

}  // namespace

json to_json(const SimReport& r) {
    json out{{"kernel_mean", estimate_json(r.kernel_mean)},
             {"kernel_second_moment", estimate_json(r.kernel_second_moment)},
             {"frac_negative_kernel", estimate_json(r.frac_negative_kernel)},
             {"budget_check", estimate_json(r.budget_check)},
             {"mv_value_estimate", estimate_json(r.mv_value_estimate)},
             {"kernel_second_moment_analytic", round12(r.kernel_second_moment_analytic)},
             {"budget_target", round12(r.budget_target)},
             {"mv_value_analytic", round12(r.mv_value_analytic)},
             {"expected_frac_negative", round12(r.expected_frac_negative)},
             {"sign_accounting_mismatches", r.sign_accounting_mismatches},
             {"kernel_loading", round12(r.kernel_loading)},
             {"n_paths", r.n_paths},
             {"n_steps", r.n_steps},
             {"seed", r.seed},
             {"warnings", r.warnings}};
    // JSON has no infinity; an unbounded threshold is reported as null.
    out["qbar"] = std::isfinite(r.qbar) ? json(round12(r.qbar)) : json(nullptr);
    return out;
}

std::string dump_report(const json& j) { return j.dump(2) + "\n"; }

}  // namespace mmv
