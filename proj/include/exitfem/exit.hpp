#pragma once

#include "exitfem/fem.hpp"
#include "exitfem/linalg.hpp"
#include "exitfem/mesh.hpp"
#include "exitfem/model.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace exitfem {

enum class FieldKind { MeanExitTime, Survival };

/// Nodal P1 values over a mesh.
struct ScalarField {
    std::shared_ptr<const SimplicialMesh> mesh;
    std::vector<double> values;
    FieldKind kind = FieldKind::MeanExitTime;
};

/// Barycentric interpolation inside the containing element.
/// Throws ConfigError for points outside the closed box.
double evaluate_field(const ScalarField& field, std::span<const double> point);

struct MeanExitOptions {
    SolveOptions linear{};
    std::size_t spd_samples = 6;  ///< per axis, for the positive-definiteness precheck
};

struct MeanExitResult {
    ScalarField field;
    SolveReport solve;
    SpdReport spd;
    std::vector<std::string> warnings;
};

/// Solves L u = -1 in D, u = 0 on the boundary; u(x) approximates E^x[tau_D].
/// Throws ConfigError when A fails the positive-definiteness precheck and
/// SolverError when the linear solve does not converge.
MeanExitResult mean_exit_time(const SdeModel& model, std::shared_ptr<const SimplicialMesh> mesh,
                              const MeanExitOptions& options = {});
MeanExitResult mean_exit_time(const SdeModel& model, const BoxDomain& domain, std::size_t k,
                              const MeanExitOptions& options = {});

/// t -> v(probe, t) at t_m = m * eta, m = 0..steps; values[0] = 1.
struct SurvivalCurve {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> probe;
    double eta = 0.0;
    double horizon = 0.0;
};

struct SurvivalOptions {
    double eta = 0.0;      ///< 0 means horizon / 200
    double horizon = 0.0;  ///< T
    std::vector<std::vector<double>> probes;
    std::vector<double> snapshot_times;
    /// Stop early once every probe value drops below this.
    std::optional<double> stop_below;
    SolveOptions linear{};
};

struct SurvivalSnapshot {
    double time = 0.0;
    ScalarField field;
};

struct SurvivalResult {
    std::vector<SurvivalCurve> curves;  ///< one per probe
    std::vector<SurvivalSnapshot> snapshots;
    std::size_t steps = 0;
    std::size_t max_iterations = 0;     ///< worst linear solve
    double max_residual = 0.0;
};

/// Number of implicit Euler steps floor(T / eta), tolerant to rounding of T / eta.
std::size_t step_count(double horizon, double eta);

/// Implicit Euler for v_t = L v with v(., 0) = 1 inside, v = 0 on the boundary.
/// Throws SolverError naming the step at which a linear solve failed.
SurvivalResult survival_function(const SdeModel& model, std::shared_ptr<const SimplicialMesh> mesh,
                                 const SurvivalOptions& options);
SurvivalResult survival_function(const SdeModel& model, const BoxDomain& domain, std::size_t k,
                                 const SurvivalOptions& options);

/// Nodes with |x_axis - value| < 1e-6, one row (remaining coordinates..., u)
/// per node, sorted lexicographically. Throws ConfigError if the slice is empty.
std::vector<std::vector<double>> extract_section(const ScalarField& field, std::size_t axis, double value);

struct SurvivalIntegral {
    double integral = 0.0;    ///< trapezoid over [0, T]
    double last_value = 0.0;  ///< v at the last recorded time
    double tail_indicator = 0.0;  ///< last_value * eta
};

/// Estimates E[tau] = int_0^inf P[tau > t] dt from a recorded curve.
SurvivalIntegral integrate_survival(const SurvivalCurve& curve);

/// "c1 c2 u" rows.
void write_section(std::ostream& os, const std::vector<std::vector<double>>& rows);
/// "t v" rows for t = eta..T; the t = 0 value is omitted.
void write_curve(std::ostream& os, const SurvivalCurve& curve);
/// "x y [z] u" rows for every node.
void write_field(std::ostream& os, const ScalarField& field);

}  // namespace exitfem
