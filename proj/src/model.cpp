#include "exitfem/model.hpp"

#include "exitfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace exitfem {

// ---------------------------------------------------------------------------
// BoxDomain

BoxDomain::BoxDomain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size()) throw ConfigError("domain bounds have different lengths");
    if (lower_.size() != 2 && lower_.size() != 3) {
        throw ConfigError("domain dimension must be 2 or 3, got " + std::to_string(lower_.size()));
    }
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (!(lower_[i] < upper_[i]) || !std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
            throw ConfigError("domain axis " + std::to_string(i) + " needs finite lower < upper");
        }
    }
}

double BoxDomain::volume() const noexcept {
    double v = 1.0;
    for (std::size_t i = 0; i < dimension(); ++i) v *= extent(i);
    return v;
}

bool BoxDomain::contains_open(std::span<const double> p) const noexcept {
    for (std::size_t i = 0; i < dimension(); ++i) {
        if (!(p[i] > lower_[i] && p[i] < upper_[i])) return false;
    }
    return true;
}

bool BoxDomain::contains_closed(std::span<const double> p, double tol) const noexcept {
    for (std::size_t i = 0; i < dimension(); ++i) {
        if (!(p[i] >= lower_[i] - tol && p[i] <= upper_[i] + tol)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Transition tables

void TransitionTable::validate() const {
    const std::size_t d = dimension();
    if (d != 2 && d != 3) throw ConfigError("transition table dimension must be 2 or 3");
    if (entries.empty()) throw ConfigError("transition table has no entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].change.size() != d) {
            throw ConfigError("transition " + std::to_string(i) + " has a change vector of length " +
                              std::to_string(entries[i].change.size()) + ", expected " +
                              std::to_string(d));
        }
    }
}

namespace {

Expression scaled(double c, const Expression& e) {
    if (c == 1.0) return e;
    if (c == -1.0) return -e;
    return Expression::literal(c) * e;
}

}  // namespace

std::vector<Expression> build_drift(const TransitionTable& table) {
    table.validate();
    const std::size_t d = table.dimension();
    std::vector<Expression> drift(d, Expression::literal(0.0));
    for (const auto& t : table.entries) {
        for (std::size_t k = 0; k < d; ++k) {
            if (t.change[k] != 0.0) drift[k] = drift[k] + scaled(t.change[k], t.rate);
        }
    }
    return drift;
}

std::vector<Expression> build_diffusion(const TransitionTable& table) {
    table.validate();
    const std::size_t d = table.dimension();
    std::vector<Expression> a(d * d, Expression::literal(0.0));
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t l = k; l < d; ++l) {
            Expression sum = Expression::literal(0.0);
            for (const auto& t : table.entries) {
                const double c = t.change[k] * t.change[l];
                if (c != 0.0) sum = sum + scaled(c, t.rate);
            }
            a[k * d + l] = sum;
            a[l * d + k] = sum;
        }
    }
    return a;
}

namespace {

/// Calls f(point) for every point of the interior grid with n samples per axis.
template <class F>
void for_each_interior_sample(const BoxDomain& domain, std::size_t n, F&& f) {
    const std::size_t d = domain.dimension();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> p(d);
    for (;;) {
        for (std::size_t i = 0; i < d; ++i) {
            p[i] = domain.lower(i) +
                   static_cast<double>(idx[i] + 1) / static_cast<double>(n + 1) * domain.extent(i);
        }
        f(std::span<const double>(p));
        std::size_t axis = 0;
        while (axis < d && ++idx[axis] == n) idx[axis++] = 0;
        if (axis == d) return;
    }
}

}  // namespace

std::vector<std::string> check_rates(const TransitionTable& table, const BoxDomain& domain,
                                     std::size_t samples_per_axis) {
    table.validate();
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        double worst = std::numeric_limits<double>::infinity();
        std::vector<double> where;
        for_each_interior_sample(domain, samples_per_axis, [&](std::span<const double> p) {
            const double r = table.entries[i].rate.evaluate(p);
            if (r < worst) {
                worst = r;
                where.assign(p.begin(), p.end());
            }
        });
        if (worst < 0.0) {
            warnings.push_back("rate of transition " + std::to_string(i) + " is negative (" +
                               std::to_string(worst) + ") at " + format_point(where));
        }
    }
    return warnings;
}

// ---------------------------------------------------------------------------
// SdeModel

SdeModel::SdeModel(std::string name, std::vector<std::string> variables, std::vector<Expression> drift,
                   const std::vector<Expression>& diffusion, ParameterMap parameters)
    : name_(std::move(name)),
      variables_(std::move(variables)),
      drift_(std::move(drift)),
      parameters_(std::move(parameters)) {
    const std::size_t d = variables_.size();
    if (d != 2 && d != 3) throw ConfigError("model dimension must be 2 or 3");
    if (drift_.size() != d) throw ConfigError("drift must have one entry per variable");
    if (diffusion.size() != d * d) throw ConfigError("diffusion matrix must be d x d");
    diffusion_.resize(d * d);
    derivative_.resize(d * d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            diffusion_[i * d + j] = diffusion[i * d + j];
            diffusion_[j * d + i] = diffusion[i * d + j];
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) derivative_[i * d + j] = differentiate(diffusion_[i * d + j], j);
    }
    for (const auto& e : drift_) {
        if (e.arity() > d) throw ConfigError("drift references an undeclared variable");
    }
    for (const auto& e : diffusion_) {
        if (e.arity() > d) throw ConfigError("diffusion references an undeclared variable");
    }
}

SdeModel SdeModel::from_table(std::string name, const TransitionTable& table, ParameterMap parameters) {
    return SdeModel(std::move(name), table.variables, build_drift(table), build_diffusion(table),
                    std::move(parameters));
}

Coefficients SdeModel::coefficients(std::span<const double> point) const {
    const std::size_t d = dim();
    Coefficients c;
    for (std::size_t i = 0; i < d; ++i) {
        c.b[i] = drift_[i].evaluate(point);
        double div = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            if (j >= i) c.a[i][j] = diffusion_[i * d + j].evaluate(point);
            else c.a[i][j] = c.a[j][i];
            div += derivative_[i * d + j].evaluate(point);
        }
        c.div_a[i] = div;
    }
    return c;
}

void SdeModel::diffusion_at(std::span<const double> point, std::span<double> out) const {
    const std::size_t d = dim();
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            const double v = diffusion_[i * d + j].evaluate(point);
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
}

void SdeModel::drift_at(std::span<const double> point, std::span<double> out) const {
    for (std::size_t i = 0; i < dim(); ++i) out[i] = drift_[i].evaluate(point);
}

// ---------------------------------------------------------------------------
// Built-in models

namespace {

std::vector<BuiltinInfo> make_registry() {
    std::vector<BuiltinInfo> r;
    r.push_back({"rumor",
                 "rumor spreading (S, I), built from its transition table",
                 {"S", "I"},
                 {{"Lambda", 0.5}, {"mu", 0.3}, {"eta", 0.2}, {"alpha", 0.1}, {"beta", 0.4}},
                 {},
                 {{"D", {0.7, 0.1}, {0.9, 0.3}}},
                 {0.8, 0.2}});
    r.push_back({"gonorrhea",
                 "SIS gonorrhea model with stochastic transmission parameter (S, I)",
                 {"S", "I"},
                 {{"N", 10000.0}, {"mu", 6.84463e-5}, {"gamma", 0.018182}, {"beta", 2.55504e-6},
                  {"alpha", 1e-4}},
                 {{"alpha", 1.5e-5}},
                 {{"D", {8500.0, 500.0}, {9500.0, 1500.0}}},
                 {9000.0, 1000.0}});
    r.push_back({"sir",
                 "SIR model with immunity (S, I, R), defined by its drift and diffusion",
                 {"S", "I", "R"},
                 {{"Lambda", 5.0}, {"mu", 0.95}, {"beta", 0.8}, {"gamma", 0.8}, {"epsilon", 0.6}},
                 {},
                 {{"D", {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}}},
                 {0.8, 0.1, 0.1}});
    r.push_back({"tumor",
                 "tumor-immune growth (E, N, T), built from its transition table",
                 {"E", "N", "T"},
                 {{"s", 1.0}, {"rho", 0.3}, {"alpha", 0.8}, {"beta1", 1.0}, {"d1", 0.3}, {"c1", 0.2},
                  {"r1", 0.7}, {"b1", 0.6}, {"beta2", 0.1}, {"c2", 0.2}, {"r2", 2.3}, {"b2", 0.2},
                  {"beta3", 0.3}, {"beta4", 0.3}, {"c3", 0.2}},
                 {},
                 {{"D1", {0.0, 0.0, 0.0}, {4.0, 2.0, 2.0}}, {"D2", {0.0, 0.0, 0.0}, {4.0, 2.0, 4.0}}},
                 {3.0, 1.5, 1.0}});
    return r;
}

Transition transition(std::vector<double> change, std::string_view rate,
                      const std::vector<std::string>& vars, const ParameterMap& p) {
    return {std::move(change), parse(rate, vars, p)};
}

std::vector<Expression> parse_all(std::initializer_list<std::string_view> sources,
                                  const std::vector<std::string>& vars, const ParameterMap& p) {
    std::vector<Expression> out;
    for (auto s : sources) out.push_back(parse(s, vars, p));
    return out;
}

}  // namespace

const std::vector<BuiltinInfo>& builtin_models() {
    static const std::vector<BuiltinInfo> registry = make_registry();
    return registry;
}

const BuiltinInfo& builtin_info(std::string_view name) {
    for (const auto& info : builtin_models()) {
        if (info.name == name) return info;
    }
    throw ConfigError("unknown built-in model \"" + std::string(name) +
                      "\" (expected rumor, gonorrhea, sir or tumor)");
}

ParameterMap builtin_parameters(std::string_view name, const ParameterMap& overrides) {
    const BuiltinInfo& info = builtin_info(name);
    ParameterMap p = info.defaults;
    for (const auto& [key, value] : overrides) {
        auto it = p.find(key);
        if (it == p.end()) {
            throw ConfigError("unknown parameter \"" + key + "\" for model " + info.name);
        }
        it->second = value;
    }
    return p;
}

std::optional<TransitionTable> builtin_table(std::string_view name, const ParameterMap& overrides) {
    const BuiltinInfo& info = builtin_info(name);
    const ParameterMap p = builtin_parameters(name, overrides);
    const auto& v = info.variables;
    if (info.name == "rumor") {
        return TransitionTable{v,
                               {transition({-1, 0}, "mu*S", v, p),
                                transition({0, -1}, "(mu + eta)*I + alpha*I^2", v, p),
                                transition({1, 0}, "Lambda + alpha*I^2", v, p),
                                transition({-1, 1}, "beta*S*I", v, p)}};
    }
    if (info.name == "tumor") {
        return TransitionTable{
            v,
            {transition({1, 0, 0}, "s + rho*E*T/(alpha + T)", v, p),
             transition({-p.at("beta1"), 0, -p.at("beta3")}, "E*T", v, p),
             transition({-1, 0, 0}, "(d1 + c1)*E", v, p),
             transition({0, 1, 0}, "r1*N*(1 - b1*N)", v, p),
             transition({0, -p.at("beta2"), -p.at("beta4")}, "N*T", v, p),
             transition({0, -1, 0}, "c2*N", v, p),
             transition({0, 0, 1}, "r2*T*(1 - b2*T)", v, p),
             transition({0, 0, -1}, "c3*T", v, p)}};
    }
    return std::nullopt;
}

SdeModel builtin_model(std::string_view name, const ParameterMap& overrides) {
    const BuiltinInfo& info = builtin_info(name);
    const ParameterMap p = builtin_parameters(name, overrides);
    if (auto table = builtin_table(name, overrides)) return SdeModel::from_table(info.name, *table, p);

    const auto& v = info.variables;
    if (info.name == "gonorrhea") {
        auto drift = parse_all({"mu*N - beta*S*I + gamma*I - mu*S", "beta*S*I - (mu + gamma)*I"}, v, p);
        const Expression noise = parse("alpha^2*S^2*I^2", v, p);
        return SdeModel(info.name, v, std::move(drift), {noise, Expression::literal(0.0), Expression::literal(0.0), noise}, p);
    }
    // sir: the displayed drift and diffusion are used as given.
    auto drift = parse_all({"Lambda - mu*S - beta*S*I", "beta*S*I - (mu + gamma + epsilon)*I",
                            "gamma*I - mu*R"},
                           v, p);
    auto a = parse_all({"Lambda + mu*S + beta*S*I", "-beta*S*I", "0",
                        "-beta*S*I", "beta*S*I + (mu + gamma + epsilon)^2*I", "(mu + gamma + epsilon)*gamma*I",
                        "0", "(mu + gamma + epsilon)*gamma*I", "gamma^2*I + mu*R"},
                       v, p);
    return SdeModel(info.name, v, std::move(drift), a, p);
}

// ---------------------------------------------------------------------------
// Positive definiteness

std::vector<double> symmetric_eigenvalues(std::span<const double> matrix, std::size_t n) {
    if (n == 2) {
        const double a = matrix[0], b = matrix[1], d = matrix[3];
        const double mean = 0.5 * (a + d);
        const double r = std::hypot(0.5 * (a - d), b);
        return {mean - r, mean + r};
    }
    // Cyclic Jacobi rotations.
    std::array<std::array<double, kMaxDim>, kMaxDim> m{};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i][j] = matrix[i * n + j];
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                norm += m[i][j] * m[i][j];
                if (i != j) off += m[i][j] * m[i][j];
            }
        }
        if (off <= 1e-30 * norm || off == 0.0) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (m[p][q] == 0.0) continue;
                const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m[k][p], mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m[p][k], mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = m[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

SpdReport validate_spd(const SdeModel& model, const BoxDomain& domain, std::size_t samples_per_axis) {
    if (samples_per_axis < 2) throw ConfigError("validate_spd needs at least 2 samples per axis");
    if (model.dimension() != domain.dimension()) {
        throw ConfigError("model and domain dimensions differ");
    }
    const std::size_t d = model.dimension();
    SpdReport report;
    report.min_eigenvalue = std::numeric_limits<double>::infinity();
    std::vector<double> a(d * d);
    for_each_interior_sample(domain, samples_per_axis, [&](std::span<const double> p) {
        ++report.samples;
        try {
            model.diffusion_at(p, a);
        } catch (const EvaluationError& e) {
            ++report.flagged;
            if (report.errors.size() < 8) report.errors.emplace_back(e.what());
            return;
        }
        const auto ev = symmetric_eigenvalues(a, d);
        const double scale = std::max(std::abs(ev.front()), std::abs(ev.back()));
        if (ev.front() < report.min_eigenvalue) {
            report.min_eigenvalue = ev.front();
            report.argmin.assign(p.begin(), p.end());
        }
        if (ev.front() <= 1e-12 * scale) ++report.flagged;
    });
    return report;
}

}  // namespace exitfem
