#include "exitfem/config.hpp"

#include "exitfem/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace exitfem {

using nlohmann::json;

namespace {

std::string number_source(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string expr_source(const json& j, const std::string& where) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number()) return number_source(j.get<double>());
    throw ConfigError(where + ": expected an expression string or a number");
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

std::size_t count(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        throw ConfigError(where + ": expected a nonnegative integer");
    }
    return j.get<std::size_t>();
}

std::vector<double> vector_of_numbers(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
    return v;
}

std::vector<SectionSpec> sections(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array of {axis, value}");
    std::vector<SectionSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string w = where + "[" + std::to_string(i) + "]";
        if (!j[i].is_object() || !j[i].contains("axis") || !j[i].contains("value")) {
            throw ConfigError(w + ": expected {\"axis\": int, \"value\": number}");
        }
        out.push_back({count(j[i]["axis"], w + ".axis"), number(j[i]["value"], w + ".value")});
    }
    return out;
}

json sections_json(const std::vector<SectionSpec>& s) {
    json a = json::array();
    for (const auto& sec : s) a.push_back({{"axis", sec.axis}, {"value", sec.value}});
    return a;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || it.key() == k;
        if (!ok) throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
    }
}

ParameterMap parameter_map(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object of name: number");
    ParameterMap p;
    for (auto it = j.begin(); it != j.end(); ++it) p[it.key()] = number(it.value(), where + "." + it.key());
    return p;
}

ModelSpec parse_model(const json& j) {
    if (!j.is_object()) throw ConfigError("model: expected an object");
    check_keys(j, {"builtin", "parameters", "variables", "drift", "diffusion", "transitions"}, "model");
    ModelSpec m;
    if (j.contains("parameters")) m.parameters = parameter_map(j["parameters"], "model.parameters");
    if (j.contains("builtin")) {
        if (!j["builtin"].is_string()) throw ConfigError("model.builtin: expected a string");
        m.kind = ModelSpec::Kind::Builtin;
        m.builtin = j["builtin"].get<std::string>();
        builtin_parameters(m.builtin, m.parameters);  // validates name and keys
        return m;
    }
    if (!j.contains("variables") || !j["variables"].is_array()) {
        throw ConfigError("model: expected \"builtin\" or a \"variables\" list");
    }
    for (const auto& v : j["variables"]) {
        if (!v.is_string()) throw ConfigError("model.variables: expected strings");
        m.variables.push_back(v.get<std::string>());
    }
    const std::size_t d = m.variables.size();
    if (j.contains("transitions")) {
        m.kind = ModelSpec::Kind::Table;
        if (!j["transitions"].is_array()) throw ConfigError("model.transitions: expected an array");
        for (std::size_t i = 0; i < j["transitions"].size(); ++i) {
            const json& t = j["transitions"][i];
            const std::string w = "model.transitions[" + std::to_string(i) + "]";
            if (!t.is_object() || !t.contains("change") || !t.contains("rate") || !t["change"].is_array()) {
                throw ConfigError(w + ": expected {\"change\": [...], \"rate\": expr}");
            }
            ModelSpec::TransitionSpec ts;
            for (std::size_t k = 0; k < t["change"].size(); ++k) {
                ts.change.push_back(expr_source(t["change"][k], w + ".change"));
            }
            ts.rate = expr_source(t["rate"], w + ".rate");
            m.transitions.push_back(std::move(ts));
        }
        return m;
    }
    m.kind = ModelSpec::Kind::Custom;
    if (!j.contains("drift") || !j["drift"].is_array() || j["drift"].size() != d) {
        throw ConfigError("model.drift: expected one expression per variable");
    }
    for (const auto& e : j["drift"]) m.drift.push_back(expr_source(e, "model.drift"));
    if (!j.contains("diffusion") || !j["diffusion"].is_array() || j["diffusion"].size() != d) {
        throw ConfigError("model.diffusion: expected a d x d matrix of expressions");
    }
    for (const auto& row : j["diffusion"]) {
        if (!row.is_array() || row.size() != d) throw ConfigError("model.diffusion: expected a d x d matrix");
        std::vector<std::string> r;
        for (const auto& e : row) r.push_back(expr_source(e, "model.diffusion"));
        m.diffusion.push_back(std::move(r));
    }
    return m;
}

json model_json(const ModelSpec& m) {
    json j;
    if (m.kind == ModelSpec::Kind::Builtin) {
        j["builtin"] = m.builtin;
        j["parameters"] = json(builtin_parameters(m.builtin, m.parameters));
        return j;
    }
    j["variables"] = m.variables;
    j["parameters"] = json(m.parameters);
    if (m.kind == ModelSpec::Kind::Table) {
        json t = json::array();
        for (const auto& tr : m.transitions) t.push_back({{"change", tr.change}, {"rate", tr.rate}});
        j["transitions"] = t;
    } else {
        j["drift"] = m.drift;
        j["diffusion"] = m.diffusion;
    }
    return j;
}

}  // namespace

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like path=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::exception&) {
        value = text;
    }
    json* node = &config;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("empty key in override path " + path);
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError("override path " + path + " crosses a non-object");
            *node = json::object();
        }
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = std::move(value);
}

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    check_keys(j, {"model", "domain", "resolution", "probes", "elliptic", "parabolic", "mc", "solver", "validate", "output"},
               "config");
    if (!j.contains("model")) throw ConfigError("config: missing \"model\"");
    RunConfig c;
    c.model = parse_model(j["model"]);

    const BuiltinInfo* info = c.model.kind == ModelSpec::Kind::Builtin ? &builtin_info(c.model.builtin) : nullptr;
    const std::size_t d = info ? info->variables.size() : c.model.variables.size();
    if (d != 2 && d != 3) throw ConfigError("model dimension must be 2 or 3");

    if (j.contains("domain")) {
        const json& dom = j["domain"];
        if (!dom.is_object() || !dom.contains("lower") || !dom.contains("upper")) {
            throw ConfigError("domain: expected {\"lower\": [...], \"upper\": [...]}");
        }
        check_keys(dom, {"lower", "upper"}, "domain");
        c.lower = vector_of_numbers(dom["lower"], "domain.lower");
        c.upper = vector_of_numbers(dom["upper"], "domain.upper");
    } else if (info) {
        c.lower = info->domains.front().lower;
        c.upper = info->domains.front().upper;
    } else {
        throw ConfigError("config: custom models need a \"domain\"");
    }
    const BoxDomain box(c.lower, c.upper);
    if (box.dimension() != d) throw ConfigError("domain dimension does not match the model");

    if (j.contains("resolution")) {
        const json& r = j["resolution"];
        if (r.is_array()) {
            for (std::size_t i = 0; i < r.size(); ++i) c.resolution.push_back(count(r[i], "resolution"));
        } else {
            c.resolution.assign(d, count(r, "resolution"));
        }
    } else {
        c.resolution.assign(d, 40);
    }
    if (c.resolution.size() != d) throw ConfigError("resolution: need one value per axis");
    for (std::size_t k : c.resolution) {
        if (k < 2) throw ConfigError("resolution must be at least 2");
    }

    if (j.contains("probes")) {
        if (!j["probes"].is_array()) throw ConfigError("probes: expected an array of points");
        for (std::size_t i = 0; i < j["probes"].size(); ++i) {
            c.probes.push_back(vector_of_numbers(j["probes"][i], "probes[" + std::to_string(i) + "]"));
        }
    } else if (info) {
        c.probes.push_back(info->probe);
    } else {
        std::vector<double> centre(d);
        for (std::size_t i = 0; i < d; ++i) centre[i] = 0.5 * (c.lower[i] + c.upper[i]);
        c.probes.push_back(centre);
    }
    for (std::size_t i = 0; i < c.probes.size(); ++i) {
        if (c.probes[i].size() != d) throw ConfigError("probes[" + std::to_string(i) + "]: wrong dimension");
        if (!box.contains_open(c.probes[i])) {
            throw ConfigError("probe " + format_point(c.probes[i]) + " is not strictly inside the domain");
        }
    }

    if (j.contains("elliptic")) {
        const json& e = j["elliptic"];
        check_keys(e, {"sections", "write_field"}, "elliptic");
        if (e.contains("sections")) c.elliptic.sections = sections(e["sections"], "elliptic.sections");
        if (e.contains("write_field")) c.elliptic.write_field = e["write_field"].get<bool>();
    }
    if (j.contains("parabolic")) {
        const json& p = j["parabolic"];
        check_keys(p, {"eta", "T", "snapshots", "snapshot_sections", "stop_below"}, "parabolic");
        if (p.contains("eta")) c.parabolic.eta = number(p["eta"], "parabolic.eta");
        if (p.contains("T")) c.parabolic.horizon = number(p["T"], "parabolic.T");
        if (p.contains("snapshots")) c.parabolic.snapshots = vector_of_numbers(p["snapshots"], "parabolic.snapshots");
        if (p.contains("snapshot_sections")) {
            c.parabolic.snapshot_sections = sections(p["snapshot_sections"], "parabolic.snapshot_sections");
        }
        if (p.contains("stop_below") && !p["stop_below"].is_null()) {
            c.parabolic.stop_below = number(p["stop_below"], "parabolic.stop_below");
        }
        if (c.parabolic.eta < 0.0) throw ConfigError("parabolic.eta must be positive");
        if (c.parabolic.horizon < 0.0) throw ConfigError("parabolic.T must be positive");
    }
    if (j.contains("mc")) {
        const json& m = j["mc"];
        check_keys(m, {"dt", "paths", "seed", "cap", "threads", "z_threshold", "survival_times"}, "mc");
        if (m.contains("dt")) c.mc.dt = number(m["dt"], "mc.dt");
        if (m.contains("paths")) c.mc.paths = count(m["paths"], "mc.paths");
        if (m.contains("seed")) {
            if (!m["seed"].is_number_integer()) throw ConfigError("mc.seed: expected an integer");
            c.mc.seed = m["seed"].get<std::uint64_t>();
        }
        if (m.contains("cap")) c.mc.cap = number(m["cap"], "mc.cap");
        if (m.contains("threads")) c.mc.threads = static_cast<unsigned>(count(m["threads"], "mc.threads"));
        if (m.contains("z_threshold")) c.mc.z_threshold = number(m["z_threshold"], "mc.z_threshold");
        if (m.contains("survival_times")) c.mc.survival_times = vector_of_numbers(m["survival_times"], "mc.survival_times");
        if (!(c.mc.dt > 0.0) || c.mc.paths < 1 || !(c.mc.cap > 0.0)) {
            throw ConfigError("mc: need dt > 0, paths >= 1 and cap > 0");
        }
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        check_keys(s, {"tolerance", "max_iter"}, "solver");
        if (s.contains("tolerance")) c.solver.tolerance = number(s["tolerance"], "solver.tolerance");
        if (s.contains("max_iter")) c.solver.max_iter = count(s["max_iter"], "solver.max_iter");
    }
    if (j.contains("validate")) {
        const json& v = j["validate"];
        check_keys(v, {"integral_tolerance", "tail_threshold", "tail_cap_factor"}, "validate");
        if (v.contains("integral_tolerance")) c.validate.integral_tolerance = number(v["integral_tolerance"], "validate.integral_tolerance");
        if (v.contains("tail_threshold")) c.validate.tail_threshold = number(v["tail_threshold"], "validate.tail_threshold");
        if (v.contains("tail_cap_factor")) c.validate.tail_cap_factor = number(v["tail_cap_factor"], "validate.tail_cap_factor");
    }
    c.output.prefix = info ? info->name : "custom";
    if (j.contains("output")) {
        const json& o = j["output"];
        check_keys(o, {"directory", "prefix"}, "output");
        if (o.contains("directory")) c.output.directory = o["directory"].get<std::string>();
        if (o.contains("prefix")) c.output.prefix = o["prefix"].get<std::string>();
    }
    // Fail early on malformed expressions.
    make_model(c);
    return c;
}

json to_json(const RunConfig& c) {
    json j;
    j["model"] = model_json(c.model);
    j["domain"] = {{"lower", c.lower}, {"upper", c.upper}};
    j["resolution"] = c.resolution;
    j["probes"] = c.probes;
    j["elliptic"] = {{"sections", sections_json(c.elliptic.sections)}, {"write_field", c.elliptic.write_field}};
    j["parabolic"] = {{"eta", c.parabolic.eta},
                      {"T", c.parabolic.horizon},
                      {"snapshots", c.parabolic.snapshots},
                      {"snapshot_sections", sections_json(c.parabolic.snapshot_sections)},
                      {"stop_below", c.parabolic.stop_below ? json(*c.parabolic.stop_below) : json(nullptr)}};
    j["mc"] = {{"dt", c.mc.dt},
               {"paths", c.mc.paths},
               {"seed", c.mc.seed},
               {"cap", c.mc.cap},
               {"threads", c.mc.threads},
               {"z_threshold", c.mc.z_threshold},
               {"survival_times", c.mc.survival_times}};
    j["solver"] = {{"tolerance", c.solver.tolerance}, {"max_iter", c.solver.max_iter}};
    j["validate"] = {{"integral_tolerance", c.validate.integral_tolerance},
                     {"tail_threshold", c.validate.tail_threshold},
                     {"tail_cap_factor", c.validate.tail_cap_factor}};
    j["output"] = {{"directory", c.output.directory}, {"prefix", c.output.prefix}};
    return j;
}

BoxDomain make_domain(const RunConfig& c) { return BoxDomain(c.lower, c.upper); }

std::optional<TransitionTable> make_table(const RunConfig& c) {
    if (c.model.kind == ModelSpec::Kind::Builtin) return builtin_table(c.model.builtin, c.model.parameters);
    if (c.model.kind != ModelSpec::Kind::Table) return std::nullopt;
    TransitionTable t;
    t.variables = c.model.variables;
    for (const auto& ts : c.model.transitions) {
        Transition tr;
        for (const auto& s : ts.change) {
            // Change components are constants: no state variables are visible.
            tr.change.push_back(parse(s, {}, c.model.parameters).evaluate({}));
        }
        tr.rate = parse(ts.rate, t.variables, c.model.parameters);
        t.entries.push_back(std::move(tr));
    }
    t.validate();
    return t;
}

SdeModel make_model(const RunConfig& c) {
    switch (c.model.kind) {
        case ModelSpec::Kind::Builtin: return builtin_model(c.model.builtin, c.model.parameters);
        case ModelSpec::Kind::Table: return SdeModel::from_table("custom", *make_table(c), c.model.parameters);
        case ModelSpec::Kind::Custom: break;
    }
    const auto& v = c.model.variables;
    const std::size_t d = v.size();
    std::vector<Expression> drift;
    for (const auto& s : c.model.drift) drift.push_back(parse(s, v, c.model.parameters));
    std::vector<Expression> a(d * d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < d; ++k) a[i * d + k] = parse(c.model.diffusion[i][k], v, c.model.parameters);
    }
    // a_ij and a_ji must agree wherever they are sampled.
    if (!c.lower.empty()) {
        const BoxDomain box = make_domain(c);
        std::vector<double> p(d);
        for (std::size_t s = 1; s <= 5; ++s) {
            for (std::size_t ax = 0; ax < d; ++ax) {
                const double frac = std::fmod(0.137 * static_cast<double>(s) * static_cast<double>(ax + 3), 1.0);
                p[ax] = box.lower(ax) + (0.05 + 0.9 * frac) * box.extent(ax);
            }
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t k = i + 1; k < d; ++k) {
                    const double x = a[i * d + k].evaluate(p), y = a[k * d + i].evaluate(p);
                    if (std::abs(x - y) > 1e-12 * std::max({1.0, std::abs(x), std::abs(y)})) {
                        throw ConfigError("diffusion matrix is not symmetric: a" + std::to_string(i + 1) +
                                          std::to_string(k + 1) + " != a" + std::to_string(k + 1) +
                                          std::to_string(i + 1) + " at " + format_point(p));
                    }
                }
            }
        }
    }
    return SdeModel("custom", v, std::move(drift), a, c.model.parameters);
}

}  // namespace exitfem
