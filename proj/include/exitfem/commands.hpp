#pragma once

#include "exitfem/config.hpp"

#include <iosfwd>
#include <string>

namespace exitfem {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitValidation = 3;

/// Built-in models with dimensions, default parameters and domains.
std::string models_listing();

/// B, A and d a_ij / d x_j of the configured model, one expression per line.
std::string derive_report(const RunConfig& config);

// Each command writes its files under config.output.directory, named
// <prefix>_..., and returns the JSON summary it also writes to disk.
nlohmann::json run_elliptic(const RunConfig& config);
nlohmann::json run_parabolic(const RunConfig& config);
nlohmann::json run_mc(const RunConfig& config);
/// Elliptic, parabolic and simulation on the same model; summary["pass"]
/// is false when any hard check fails.
nlohmann::json run_validate(const RunConfig& config);

/// Command-line front end:
///   exitfem models
///   exitfem <derive|elliptic|parabolic|mc|validate> [config.json] [--set path=value]... [--out dir]
/// Returns 0 on success, 1 on configuration errors, 2 on solver failures and
/// 3 when validation fails.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace exitfem
