#pragma once

#include "xva/model.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xva::cli {

/// Every run parameter, grouped as the [model], [claim] and [solver] sections of the config file.
/// Defaults are the one-dimensional put of the numerical experiments.
struct RunConfig {
    // [model]
    double mu = 0.05;
    double sigma = 0.2;
    double x0 = 0.8;
    int d = 1;

    // [claim]
    double K = 1.0;
    double R = 0.4;
    double Rprime = 1.0;
    double lambda = 0.1;
    double lambdabar = 0.0;
    double r = 0.03;
    double T = 1.0;
    std::string payoff = "put";         // put | forward | constant
    std::string closeout = "recovery";  // recovery | identity

    // [solver]
    std::string method = "analytic";             // analytic | mc | pde | dbsde | dbsde-multifc
    std::string convention = "replacement";      // replacement | riskfree | none
    int N = 100;
    int L = 64;
    int J = 2000;
    int Np = 2000;
    int iters = 4000;
    double lr = 5e-3;
    int M = 5;
    std::uint64_t seed = 0;
    double tolerance = 1e-8;
    long long mc_paths = 100000;
    std::string scheme = "euler";  // euler | exact
    bool early_stop = true;
    int min_iters = 1000;

    /// Cross-field checks; throws InvalidArgument naming the offending field.
    void validate() const;

    Dynamics dynamics() const;
    Claim claim() const;
    HazardModel hazard() const;
};

/// Dotted names of every accepted key, e.g. "model.mu".
const std::vector<std::string>& config_keys();

/// Sets one dotted key from text. Unknown keys and malformed values are rejected.
void set_key(RunConfig& cfg, std::string_view dotted_key, std::string_view value);

/// Reads the INI text: `[section]` headers, `key = value` lines, `#` or `;` comments.
/// Keys outside a section, unknown keys and repeated keys are errors.
void apply_ini(RunConfig& cfg, std::string_view text, const std::string& source = "config");

void load_config_file(RunConfig& cfg, const std::string& path);

/// Canonical INI text of cfg; apply_ini on it reproduces cfg.
std::string to_ini(const RunConfig& cfg);

} // namespace xva::cli
