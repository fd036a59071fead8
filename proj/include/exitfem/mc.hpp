#pragma once

#include "exitfem/box.hpp"
#include "exitfem/model.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace exitfem {

/// Lower-triangular L (row-major, d*d) with L L^T = A(point).
/// Throws SolverError if A(point) is not positive definite.
std::vector<double> cholesky_at(const SdeModel& model, std::span<const double> point);

/// In-place Cholesky of a row-major n x n matrix; returns false on a
/// non-positive pivot. The strict upper triangle is zeroed.
bool cholesky_inplace(std::span<double> matrix, std::size_t n);

struct SimulationConfig {
    double dt = 1e-4;
    std::size_t paths = 10000;
    std::uint64_t seed = 1;
    double time_cap = 100.0;
    unsigned threads = 1;
    /// Times at which the empirical survival P[tau > t] is reported.
    std::vector<double> survival_times;
};

struct ExitStats {
    double mean = 0.0;
    double stddev = 0.0;
    double std_error = 0.0;  ///< stddev / sqrt(exited)
    std::size_t exited = 0;
    std::size_t censored = 0;  ///< reached the time cap
    std::size_t aborted = 0;   ///< Cholesky failure mid-path
    std::vector<double> survival_times;
    std::vector<double> survival_values;
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::vector<std::string> errors;

    bool has_mean() const noexcept { return exited > 0; }
};

/// Euler-Maruyama paths  Y <- Y + B(Y) dt + sqrt(dt) L(Y) xi  from `start`
/// until Y leaves the open box; the exit time is steps * dt. Path i draws from
/// its own generator seeded by (seed, i), so the result does not depend on
/// `threads`. Throws ConfigError for a start outside the open box.
ExitStats simulate_exit(const SdeModel& model, const BoxDomain& domain, std::span<const double> start,
                        const SimulationConfig& config);

/// The 0.5826 constant of the discrete-monitoring boundary shift
/// delta = 0.5826 sigma sqrt(dt) for Euler schemes with post-step exit checks.
inline constexpr double kMonitoringShift = 0.5825971579390106;

/// Estimated upward bias of the simulated mean exit time: each face is moved
/// out by delta_i = 0.5826 sqrt(dt max_D a_ii) and the one-dimensional exit
/// time from `start` is perturbed accordingly; the worst axis is returned as
/// a fraction of the mean.
double monitoring_bias_fraction(const SdeModel& model, const BoxDomain& domain,
                                std::span<const double> start, double dt, std::size_t samples_per_axis = 8);

struct ComparisonReport {
    double fem_value = 0.0;
    double mc_mean = 0.0;
    double std_error = 0.0;
    double z = 0.0;               ///< (fem - mc) / SE
    double bias_allowance = 0.0;  ///< absolute
    double z_threshold = 3.0;
    bool pass = false;
    std::string note;
};

/// Passes when |fem - mc| <= z_threshold * SE + bias_allowance.
ComparisonReport compare(double fem_value, const ExitStats& stats, double z_threshold = 3.0,
                         double bias_allowance = 0.0);

}  // namespace exitfem
