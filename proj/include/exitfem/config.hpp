#pragma once

#include "exitfem/model.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace exitfem {

/// How the model enters a run: a built-in name, direct b_i / a_ij
/// expressions, or a transition table.
struct ModelSpec {
    enum class Kind { Builtin, Custom, Table };
    struct TransitionSpec {
        std::vector<std::string> change;  ///< constant expressions
        std::string rate;
    };

    Kind kind = Kind::Builtin;
    std::string builtin;
    ParameterMap parameters;  ///< overrides for built-ins, full set otherwise
    std::vector<std::string> variables;
    std::vector<std::string> drift;
    std::vector<std::vector<std::string>> diffusion;
    std::vector<TransitionSpec> transitions;
};

struct SectionSpec {
    std::size_t axis = 0;
    double value = 0.0;
};

struct RunConfig {
    ModelSpec model;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::size_t> resolution;
    std::vector<std::vector<double>> probes;

    struct Elliptic {
        std::vector<SectionSpec> sections;
        bool write_field = false;
    } elliptic;

    struct Parabolic {
        double eta = 0.0;  ///< 0: T / 200
        double horizon = 0.0;
        std::vector<double> snapshots;
        std::vector<SectionSpec> snapshot_sections;
        std::optional<double> stop_below;
    } parabolic;

    struct Mc {
        double dt = 1e-4;
        std::size_t paths = 20000;
        std::uint64_t seed = 20240501;
        double cap = 100.0;
        unsigned threads = 1;
        double z_threshold = 3.0;
        std::vector<double> survival_times;
    } mc;

    struct Solver {
        double tolerance = 1e-10;
        std::size_t max_iter = 0;
    } solver;

    struct Validate {
        double integral_tolerance = 0.10;
        double tail_threshold = 0.01;
        double tail_cap_factor = 10.0;
    } validate;

    struct Output {
        std::string directory = "out";
        std::string prefix = "run";
    } output;
};

nlohmann::json load_config_file(const std::string& path);

/// Applies "a.b.c=value"; the value is read as JSON when it parses, otherwise
/// as a string. Intermediate objects are created as needed.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Validates and fills defaults (built-in domain and probe, output prefix).
/// Throws ConfigError / ParseError.
RunConfig parse_config(const nlohmann::json& config);

/// Effective configuration with every default written out.
nlohmann::json to_json(const RunConfig& config);

BoxDomain make_domain(const RunConfig& config);
SdeModel make_model(const RunConfig& config);
/// Table for table-based and table-built built-in models, nullopt otherwise.
std::optional<TransitionTable> make_table(const RunConfig& config);

}  // namespace exitfem
