#include "exitfem/exit.hpp"

#include "exitfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace exitfem {

double evaluate_field(const ScalarField& field, std::span<const double> point) {
    const PointLocation loc = locate_point(*field.mesh, point);
    const auto el = field.mesh->element(loc.element);
    // At a node the interpolant is the nodal value itself, not a rounded sum.
    for (std::size_t a = 0; a < el.size(); ++a) {
        if (loc.barycentric[a] >= 1.0 - 1e-12) return field.values[el[a]];
    }
    double v = 0.0;
    for (std::size_t a = 0; a < el.size(); ++a) v += loc.barycentric[a] * field.values[el[a]];
    return v;
}

MeanExitResult mean_exit_time(const SdeModel& model, std::shared_ptr<const SimplicialMesh> mesh,
                              const MeanExitOptions& options) {
    const BoxDomain& domain = mesh->domain();
    MeanExitResult result;
    result.spd = validate_spd(model, domain, std::max<std::size_t>(options.spd_samples, 2));
    if (!result.spd.ok()) {
        std::ostringstream os;
        os << "diffusion matrix of model " << model.name() << " is not positive definite at "
           << result.spd.flagged << " of " << result.spd.samples << " sample points (min eigenvalue "
           << result.spd.min_eigenvalue << " at " << format_point(result.spd.argmin) << ")";
        throw ConfigError(os.str());
    }
    for (std::size_t k : mesh->divisions()) {
        if (k < 2) throw ConfigError("mean exit time needs at least 2 divisions per axis");
    }

    AssembledSystem sys = apply_dirichlet(assemble_elliptic(*mesh, model), 0.0);
    std::vector<double> u(mesh->node_count(), 0.0);
    result.solve = solve(sys.matrix, sys.rhs, u, options.linear);
    if (!result.solve.converged) {
        std::ostringstream os;
        os << "elliptic solve did not converge: relative residual " << result.solve.relative_residual
           << " after " << result.solve.iterations << " iterations";
        throw SolverError(os.str());
    }
    const double umax = *std::max_element(u.begin(), u.end());
    const double umin = *std::min_element(u.begin(), u.end());
    if (umin < -1e-8 * std::max(umax, 0.0)) {
        std::ostringstream os;
        os << "maximum principle violated: min u = " << umin << " (max u = " << umax << ")";
        result.warnings.push_back(os.str());
    }
    result.field = ScalarField{std::move(mesh), std::move(u), FieldKind::MeanExitTime};
    return result;
}

MeanExitResult mean_exit_time(const SdeModel& model, const BoxDomain& domain, std::size_t k,
                              const MeanExitOptions& options) {
    return mean_exit_time(model, std::make_shared<const SimplicialMesh>(mesh_box(domain, k)), options);
}

std::size_t step_count(double horizon, double eta) {
    return static_cast<std::size_t>(std::floor(horizon / eta * (1.0 + 1e-12) + 1e-9));
}

SurvivalResult survival_function(const SdeModel& model, std::shared_ptr<const SimplicialMesh> mesh,
                                 const SurvivalOptions& options) {
    if (!(options.horizon > 0.0)) throw ConfigError("survival horizon T must be positive");
    const double eta = options.eta > 0.0 ? options.eta : options.horizon / 200.0;
    if (options.horizon < eta * (1.0 - 1e-12)) throw ConfigError("survival horizon T must be >= eta");
    const BoxDomain& domain = mesh->domain();
    for (const auto& p : options.probes) {
        if (p.size() != domain.dimension() || !domain.contains_open(p)) {
            throw ConfigError("probe " + format_point(p) + " is not strictly inside the domain");
        }
    }

    const ParabolicSystem sys = assemble_parabolic_step(*mesh, model, eta);
    const std::size_t n = mesh->node_count();
    std::vector<double> u(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = sys.dirichlet[i] ? 0.0 : 1.0;

    const std::size_t steps = step_count(options.horizon, eta);
    SurvivalResult result;
    for (const auto& p : options.probes) {
        SurvivalCurve c;
        c.probe = p;
        c.eta = eta;
        c.horizon = options.horizon;
        c.times.push_back(0.0);
        c.values.push_back(1.0);
        result.curves.push_back(std::move(c));
    }

    std::vector<std::size_t> snapshot_steps;
    for (double t : options.snapshot_times) {
        snapshot_steps.push_back(static_cast<std::size_t>(std::llround(t / eta)));
    }
    auto take_snapshots = [&](std::size_t m) {
        for (std::size_t s = 0; s < snapshot_steps.size(); ++s) {
            if (snapshot_steps[s] == m) {
                result.snapshots.push_back({static_cast<double>(m) * eta, ScalarField{mesh, u, FieldKind::Survival}});
            }
        }
    };
    take_snapshots(0);

    ScalarField view{mesh, {}, FieldKind::Survival};
    for (std::size_t m = 1; m <= steps; ++m) {
        spmv(sys.mass, u, rhs);
        for (std::size_t i = 0; i < n; ++i) {
            if (sys.dirichlet[i]) rhs[i] = 0.0;
        }
        const SolveReport rep = solve(sys.step, rhs, u, options.linear);
        if (!rep.converged) {
            std::ostringstream os;
            os << "parabolic solve did not converge at step " << m << ": relative residual "
               << rep.relative_residual;
            throw SolverError(os.str());
        }
        result.max_iterations = std::max(result.max_iterations, rep.iterations);
        result.max_residual = std::max(result.max_residual, rep.relative_residual);
        result.steps = m;

        view.values = u;
        bool all_below = !result.curves.empty();
        for (auto& c : result.curves) {
            const double v = evaluate_field(view, c.probe);
            c.times.push_back(static_cast<double>(m) * eta);
            c.values.push_back(v);
            all_below = all_below && options.stop_below && v < *options.stop_below;
        }
        take_snapshots(m);
        if (all_below) break;
    }
    return result;
}

SurvivalResult survival_function(const SdeModel& model, const BoxDomain& domain, std::size_t k,
                                 const SurvivalOptions& options) {
    return survival_function(model, std::make_shared<const SimplicialMesh>(mesh_box(domain, k)), options);
}

std::vector<std::vector<double>> extract_section(const ScalarField& field, std::size_t axis, double value) {
    const SimplicialMesh& mesh = *field.mesh;
    const std::size_t d = mesh.dimension();
    if (axis >= d) throw ConfigError("section axis out of range");
    constexpr double eps = 1e-6;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        const auto p = mesh.node(i);
        if (std::abs(p[axis] - value) >= eps) continue;
        std::vector<double> row;
        for (std::size_t a = 0; a < d; ++a) {
            if (a != axis) row.push_back(p[a]);
        }
        row.push_back(field.values[i]);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        const BoxDomain& box = mesh.domain();
        const double k = static_cast<double>(mesh.divisions()[axis]);
        const double h = box.extent(axis) / k;
        const double j = std::clamp(std::round((value - box.lower(axis)) / h), 0.0, k);
        std::ostringstream os;
        os.precision(12);
        os << "no mesh nodes on the plane x" << axis << " = " << value << "; nearest grid plane is "
           << box.lower(axis) + j * h;
        throw ConfigError(os.str());
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

SurvivalIntegral integrate_survival(const SurvivalCurve& curve) {
    if (curve.times.empty()) throw ConfigError("empty survival curve");
    SurvivalIntegral r;
    for (std::size_t m = 1; m < curve.times.size(); ++m) {
        r.integral += 0.5 * (curve.values[m] + curve.values[m - 1]) * (curve.times[m] - curve.times[m - 1]);
    }
    r.last_value = curve.values.back();
    r.tail_indicator = r.last_value * curve.eta;
    return r;
}

void write_section(std::ostream& os, const std::vector<std::vector<double>>& rows) {
    const auto old = os.precision(12);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? " " : "") << row[c];
        os << '\n';
    }
    os.precision(old);
}

void write_curve(std::ostream& os, const SurvivalCurve& curve) {
    const auto old = os.precision(12);
    for (std::size_t m = 1; m < curve.times.size(); ++m) {
        os << curve.times[m] << ' ' << std::clamp(curve.values[m], 0.0, 1.0) << '\n';
    }
    os.precision(old);
}

void write_field(std::ostream& os, const ScalarField& field) {
    const auto old = os.precision(12);
    const SimplicialMesh& mesh = *field.mesh;
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        for (double x : mesh.node(i)) os << x << ' ';
        os << field.values[i] << '\n';
    }
    os.precision(old);
}

}  // namespace exitfem
