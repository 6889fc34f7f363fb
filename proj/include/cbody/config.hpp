#pragma once

#include "cbody/balances.hpp"
#include "cbody/solver.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace cbody {

struct VerifySettings {
    std::optional<double> tol_eq;
    std::optional<double> tol_config;
    int test_basis_size = 20;
    std::uint64_t seed = 0;
};

struct ProbeSettings {
    long samples = 10000;
    std::uint64_t seed = 0;
};

/// A fully parsed run configuration.
struct RunConfig {
    nlohmann::json echo; ///< the document as read
    ManifoldSpec spec;
    std::optional<ReferenceGrid> grid_storage;
    EnergyModel model;
    BoundaryData boundary;
    InitialGuess initial;
    SolverConfig solver;
    VerifySettings verify;
    ProbeSettings probe;
    std::string output = "out";

    const ReferenceGrid& grid() const { return *grid_storage; }
    /// Overrides every seed (solver perturbation, test basis, probe).
    void set_seed(std::uint64_t seed);
    Tolerances tolerances(double scale = 1.0) const;
};

/// Parses a configuration document. Throws ConfigError naming the offending
/// field (as a JSON pointer) or the parse position.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

} // namespace cbody
