#include "exitfem/commands.hpp"

#include "exitfem/error.hpp"
#include "exitfem/exit.hpp"
#include "exitfem/mc.hpp"
#include "exitfem/mesh.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace exitfem {

using nlohmann::json;

namespace {

std::string compact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::filesystem::path output_path(const RunConfig& c, const std::string& suffix) {
    return std::filesystem::path(c.output.directory) / (c.output.prefix + "_" + suffix);
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    body(os);
    if (!os) throw ConfigError("error while writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) {
    write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

void write_effective_config(const RunConfig& c) { write_json(output_path(c, "config.json"), to_json(c)); }

std::string section_name(const SdeModel& model, const SectionSpec& s) {
    return model.variables().at(s.axis) + compact(s.value);
}

void check_sections(const RunConfig& c, const std::vector<SectionSpec>& sections) {
    for (const auto& s : sections) {
        if (s.axis >= c.lower.size()) throw ConfigError("section axis " + std::to_string(s.axis) + " out of range");
    }
}

SolveOptions solve_options(const RunConfig& c) { return {c.solver.tolerance, c.solver.max_iter}; }

std::shared_ptr<const SimplicialMesh> make_mesh(const RunConfig& c) {
    return std::make_shared<const SimplicialMesh>(make_domain(c), c.resolution);
}

json solve_json(const SolveReport& r) {
    return {{"iterations", r.iterations}, {"relative_residual", r.relative_residual}, {"converged", r.converged}};
}

json spd_json(const SpdReport& r) {
    return {{"samples", r.samples},
            {"flagged", r.flagged},
            {"min_eigenvalue", r.min_eigenvalue},
            {"argmin", r.argmin},
            {"errors", r.errors},
            {"ok", r.ok()}};
}

json stats_json(const ExitStats& s) {
    return {{"mean", s.has_mean() ? json(s.mean) : json(nullptr)},
            {"stddev", s.stddev},
            {"std_error", s.std_error},
            {"exited", s.exited},
            {"censored", s.censored},
            {"aborted", s.aborted},
            {"seed", s.seed},
            {"dt", s.dt},
            {"errors", s.errors}};
}

json comparison_json(const ComparisonReport& r) {
    return {{"fem", r.fem_value},
            {"mc_mean", r.mc_mean},
            {"std_error", r.std_error},
            {"z", std::isfinite(r.z) ? json(r.z) : json(nullptr)},
            {"z_threshold", r.z_threshold},
            {"bias_allowance", r.bias_allowance},
            {"pass", r.pass},
            {"note", r.note}};
}

struct CurveChecks {
    bool monotone = true;
    bool in_range = true;
};

CurveChecks check_curve(const SurvivalCurve& c) {
    constexpr double tol = 1e-8;
    CurveChecks k;
    for (std::size_t m = 0; m < c.values.size(); ++m) {
        if (c.values[m] < -tol || c.values[m] > 1.0 + tol) k.in_range = false;
        if (m > 0 && c.values[m] > c.values[m - 1] + tol) k.monotone = false;
    }
    return k;
}

struct EllipticRun {
    MeanExitResult result;
    std::vector<double> probe_values;
    double seconds = 0.0;
};

EllipticRun solve_elliptic(const RunConfig& c, const SdeModel& model) {
    const auto start = std::chrono::steady_clock::now();
    EllipticRun run;
    MeanExitOptions opts;
    opts.linear = solve_options(c);
    run.result = mean_exit_time(model, make_mesh(c), opts);
    for (const auto& p : c.probes) run.probe_values.push_back(evaluate_field(run.result.field, p));
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

json elliptic_json(const RunConfig& c, const EllipticRun& run) {
    const auto& field = run.result.field.values;
    json probes = json::array();
    for (std::size_t i = 0; i < c.probes.size(); ++i) {
        probes.push_back({{"point", c.probes[i]}, {"value", run.probe_values[i]}});
    }
    return {{"probes", probes},
            {"solver", solve_json(run.result.solve)},
            {"spd", spd_json(run.result.spd)},
            {"warnings", run.result.warnings},
            {"nodes", field.size()},
            {"min_value", *std::min_element(field.begin(), field.end())},
            {"max_value", *std::max_element(field.begin(), field.end())},
            {"seconds", run.seconds}};
}

SurvivalOptions survival_options(const RunConfig& c) {
    SurvivalOptions o;
    o.eta = c.parabolic.eta;
    o.horizon = c.parabolic.horizon;
    o.probes = c.probes;
    o.snapshot_times = c.parabolic.snapshots;
    o.stop_below = c.parabolic.stop_below;
    o.linear = solve_options(c);
    return o;
}

json curves_json(const SurvivalResult& r, bool& all_ok) {
    json curves = json::array();
    for (const auto& curve : r.curves) {
        const CurveChecks k = check_curve(curve);
        const SurvivalIntegral in = integrate_survival(curve);
        all_ok = all_ok && k.monotone && k.in_range;
        curves.push_back({{"probe", curve.probe},
                          {"eta", curve.eta},
                          {"T", curve.horizon},
                          {"recorded", curve.values.size()},
                          {"last_value", in.last_value},
                          {"integral", in.integral},
                          {"tail_indicator", in.tail_indicator},
                          {"monotone", k.monotone},
                          {"in_range", k.in_range}});
    }
    return curves;
}

SimulationConfig simulation_config(const RunConfig& c) {
    SimulationConfig s;
    s.dt = c.mc.dt;
    s.paths = c.mc.paths;
    s.seed = c.mc.seed;
    s.time_cap = c.mc.cap;
    s.threads = c.mc.threads;
    s.survival_times = c.mc.survival_times;
    return s;
}

void print_matrix_entry(std::ostream& os, const std::string& label, const Expression& e,
                        const std::vector<std::string>& vars) {
    os << "  " << label << " = " << to_string(e, vars) << '\n';
}

}  // namespace

std::string models_listing() {
    std::ostringstream os;
    os.precision(10);
    for (const auto& m : builtin_models()) {
        os << m.name << " (" << m.variables.size() << "D: ";
        for (std::size_t i = 0; i < m.variables.size(); ++i) os << (i ? ", " : "") << m.variables[i];
        os << ")\n  " << m.description << "\n  parameters:";
        for (const auto& [k, v] : m.defaults) os << ' ' << k << '=' << v;
        os << '\n';
        for (const auto& [k, v] : m.alternatives) os << "  alternative: " << k << '=' << v << '\n';
        for (const auto& d : m.domains) {
            os << "  domain " << d.label << ": ";
            for (std::size_t i = 0; i < d.lower.size(); ++i) {
                os << (i ? " x " : "") << '(' << d.lower[i] << ", " << d.upper[i] << ')';
            }
            os << '\n';
        }
        os << "  probe: " << format_point(m.probe) << '\n';
    }
    return os.str();
}

std::string derive_report(const RunConfig& c) {
    const SdeModel model = make_model(c);
    const auto& vars = model.variables();
    const std::size_t d = model.dimension();
    std::ostringstream os;
    os << "model " << model.name() << " in (";
    for (std::size_t i = 0; i < d; ++i) os << (i ? ", " : "") << vars[i];
    os << ")\n";
    if (const auto table = make_table(c)) {
        os << "transitions:\n";
        for (const auto& t : table->entries) {
            os << "  (";
            for (std::size_t i = 0; i < t.change.size(); ++i) os << (i ? ", " : "") << compact(t.change[i]);
            os << ") at rate " << to_string(t.rate, vars) << '\n';
        }
    }
    os << "drift B:\n";
    for (std::size_t i = 0; i < d; ++i) print_matrix_entry(os, "b" + std::to_string(i + 1), model.drift(i), vars);
    os << "diffusion A:\n";
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            print_matrix_entry(os, "a" + std::to_string(i + 1) + std::to_string(j + 1), model.diffusion(i, j), vars);
        }
    }
    os << "derivatives d a_ij / d x_j:\n";
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            print_matrix_entry(os, "d a" + std::to_string(i + 1) + std::to_string(j + 1) + " / d " + vars[j],
                               model.derivative(i, j), vars);
        }
    }
    return os.str();
}

json run_elliptic(const RunConfig& c) {
    check_sections(c, c.elliptic.sections);
    const SdeModel model = make_model(c);
    write_effective_config(c);
    const EllipticRun run = solve_elliptic(c, model);
    json summary = elliptic_json(c, run);
    summary["model"] = model.name();
    summary["resolution"] = c.resolution;
    json files = json::array();
    for (const auto& s : c.elliptic.sections) {
        const auto rows = extract_section(run.result.field, s.axis, s.value);
        const auto path = output_path(c, "section_" + section_name(model, s) + ".txt");
        write_file(path, [&](std::ostream& os) { write_section(os, rows); });
        files.push_back({{"path", path.string()}, {"rows", rows.size()}});
    }
    if (c.elliptic.write_field) {
        const auto path = output_path(c, "field.txt");
        write_file(path, [&](std::ostream& os) { write_field(os, run.result.field); });
        files.push_back({{"path", path.string()}, {"rows", run.result.field.values.size()}});
    }
    summary["files"] = files;
    write_json(output_path(c, "elliptic.json"), summary);
    return summary;
}

json run_parabolic(const RunConfig& c) {
    if (!(c.parabolic.horizon > 0.0)) throw ConfigError("parabolic.T must be set to a positive horizon");
    check_sections(c, c.parabolic.snapshot_sections);
    const SdeModel model = make_model(c);
    write_effective_config(c);
    const auto start = std::chrono::steady_clock::now();
    const SurvivalResult r = survival_function(model, make_mesh(c), survival_options(c));
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    bool ok = true;
    json summary{{"model", model.name()},
                 {"resolution", c.resolution},
                 {"steps", r.steps},
                 {"max_iterations", r.max_iterations},
                 {"max_residual", r.max_residual},
                 {"curves", curves_json(r, ok)},
                 {"checks_pass", ok},
                 {"seconds", seconds}};
    json files = json::array();
    for (std::size_t i = 0; i < r.curves.size(); ++i) {
        const auto path = output_path(c, "curve" + std::to_string(i + 1) + ".txt");
        write_file(path, [&](std::ostream& os) { write_curve(os, r.curves[i]); });
        files.push_back({{"path", path.string()}, {"rows", r.curves[i].values.size() - 1}});
    }
    for (const auto& snap : r.snapshots) {
        if (c.parabolic.snapshot_sections.empty()) {
            const auto path = output_path(c, "snapshot_t" + compact(snap.time) + ".txt");
            write_file(path, [&](std::ostream& os) { write_field(os, snap.field); });
            files.push_back({{"path", path.string()}, {"rows", snap.field.values.size()}});
            continue;
        }
        for (const auto& s : c.parabolic.snapshot_sections) {
            const auto rows = extract_section(snap.field, s.axis, s.value);
            const auto path = output_path(c, "snapshot_t" + compact(snap.time) + "_" + section_name(model, s) + ".txt");
            write_file(path, [&](std::ostream& os) { write_section(os, rows); });
            files.push_back({{"path", path.string()}, {"rows", rows.size()}});
        }
    }
    summary["files"] = files;
    write_json(output_path(c, "parabolic.json"), summary);
    return summary;
}

json run_mc(const RunConfig& c) {
    const SdeModel model = make_model(c);
    const BoxDomain box = make_domain(c);
    write_effective_config(c);
    const SimulationConfig sim = simulation_config(c);
    json runs = json::array();
    json files = json::array();
    for (std::size_t i = 0; i < c.probes.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        const ExitStats stats = simulate_exit(model, box, c.probes[i], sim);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json run = stats_json(stats);
        run["probe"] = c.probes[i];
        run["bias_fraction"] = monitoring_bias_fraction(model, box, c.probes[i], sim.dt);
        run["seconds"] = seconds;
        if (!stats.survival_times.empty()) {
            const auto path = output_path(c, "mc_survival" + std::to_string(i + 1) + ".txt");
            write_file(path, [&](std::ostream& os) {
                os.precision(12);
                for (std::size_t k = 0; k < stats.survival_times.size(); ++k) {
                    os << stats.survival_times[k] << ' ' << stats.survival_values[k] << '\n';
                }
            });
            files.push_back({{"path", path.string()}, {"rows", stats.survival_times.size()}});
            run["survival"] = {{"t", stats.survival_times}, {"v", stats.survival_values}};
        }
        runs.push_back(run);
    }
    json summary{{"model", model.name()}, {"paths", sim.paths}, {"seed", sim.seed}, {"runs", runs}, {"files", files}};
    write_json(output_path(c, "mc.json"), summary);
    return summary;
}

json run_validate(const RunConfig& c) {
    const SdeModel model = make_model(c);
    const BoxDomain box = make_domain(c);
    write_effective_config(c);
    json checks = json::array();
    bool pass = true;
    auto check = [&](const std::string& name, bool ok, json detail) {
        pass = pass && ok;
        detail["name"] = name;
        detail["pass"] = ok;
        checks.push_back(std::move(detail));
    };

    // Elliptic.
    const EllipticRun ell = solve_elliptic(c, model);
    const auto& u = ell.result.field.values;
    const double umax = *std::max_element(u.begin(), u.end());
    const double umin = *std::min_element(u.begin(), u.end());
    check("maximum_principle", umin >= -1e-8 * umax, {{"min_value", umin}, {"max_value", umax}});

    // Parabolic, run into the tail: the horizon is stretched to a multiple of
    // the largest mean exit time and the run stops once every probe is small.
    const double mean_max = *std::max_element(ell.probe_values.begin(), ell.probe_values.end());
    SurvivalOptions sopt = survival_options(c);
    sopt.snapshot_times.clear();
    if (!(sopt.eta > 0.0)) sopt.eta = sopt.horizon > 0.0 ? sopt.horizon / 200.0 : mean_max / 100.0;
    sopt.horizon = std::max(sopt.horizon, c.validate.tail_cap_factor * mean_max);
    if (!sopt.stop_below) sopt.stop_below = c.validate.tail_threshold;
    const SurvivalResult par = survival_function(model, make_mesh(c), sopt);
    bool curves_ok = true;
    const json curves = curves_json(par, curves_ok);
    for (std::size_t i = 0; i < par.curves.size(); ++i) {
        const CurveChecks k = check_curve(par.curves[i]);
        check("survival_monotone", k.monotone, {{"probe", c.probes[i]}});
        check("survival_range", k.in_range, {{"probe", c.probes[i]}});
        const double integral = integrate_survival(par.curves[i]).integral;
        const double gap = std::abs(integral - ell.probe_values[i]) / std::abs(ell.probe_values[i]);
        check("integral_vs_mean", gap <= c.validate.integral_tolerance,
              {{"probe", c.probes[i]},
               {"integral", integral},
               {"mean_exit_time", ell.probe_values[i]},
               {"relative_gap", gap},
               {"tolerance", c.validate.integral_tolerance}});
    }

    // Simulation at the first probe.
    const SimulationConfig sim = simulation_config(c);
    const ExitStats stats = simulate_exit(model, box, c.probes.front(), sim);
    const double fraction = monitoring_bias_fraction(model, box, c.probes.front(), sim.dt);
    const ComparisonReport cmp =
        compare(ell.probe_values.front(), stats, c.mc.z_threshold, fraction * (stats.has_mean() ? stats.mean : 0.0));
    json detail = comparison_json(cmp);
    detail["probe"] = c.probes.front();
    detail["bias_fraction"] = fraction;
    check("fem_vs_mc", cmp.pass, detail);

    json summary{{"model", model.name()},
                 {"seed", c.mc.seed},
                 {"elliptic", elliptic_json(c, ell)},
                 {"parabolic",
                  {{"eta", par.curves.front().eta},
                   {"T", sopt.horizon},
                   {"steps", par.steps},
                   {"stop_below", *sopt.stop_below},
                   {"curves", curves}}},
                 {"mc", stats_json(stats)},
                 {"checks", checks},
                 {"pass", pass}};
    write_json(output_path(c, "validate.json"), summary);
    return summary;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mean exit times and survival functions of diffusion models on boxes"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "JSON run configuration");
        sub->add_option("--set", overrides, "override a leaf, e.g. --set mc.seed=7")->allow_extra_args(false);
        sub->add_option("--out", out_dir, "output directory (output.directory)");
    };
    app.add_subcommand("models", "list the built-in models");
    add_common(app.add_subcommand("derive", "print drift, diffusion and derivative table"));
    add_common(app.add_subcommand("elliptic", "solve for the mean exit time"));
    add_common(app.add_subcommand("parabolic", "solve for the exit-time survival function"));
    add_common(app.add_subcommand("mc", "simulate exit times"));
    add_common(app.add_subcommand("validate", "cross-check elliptic, parabolic and simulation"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        if (command == "models") {
            out << models_listing();
            return kExitOk;
        }
        json raw = config_path.empty() ? json::object() : load_config_file(config_path);
        for (const auto& o : overrides) apply_override(raw, o);
        if (!out_dir.empty()) apply_override(raw, "output.directory=" + json(out_dir).dump());
        const RunConfig config = parse_config(raw);

        if (command == "derive") {
            out << derive_report(config);
            return kExitOk;
        }
        json summary;
        if (command == "elliptic") summary = run_elliptic(config);
        if (command == "parabolic") summary = run_parabolic(config);
        if (command == "mc") summary = run_mc(config);
        if (command == "validate") summary = run_validate(config);
        out << summary.dump(2) << '\n';
        if (command == "validate" && !summary["pass"].get<bool>()) {
            err << "validation failed\n";
            return kExitValidation;
        }
        return kExitOk;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "file error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace exitfem
