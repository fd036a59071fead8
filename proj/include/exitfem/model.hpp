#pragma once

#include "exitfem/box.hpp"
#include "exitfem/expr.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exitfem {

inline constexpr std::size_t kMaxDim = 3;

/// One row of a transition table: a state change and its rate p_i / dt.
struct Transition {
    std::vector<double> change;
    Expression rate;
};

/// Small-time state changes with their rates. The residual "no change"
/// state is implicit and never stored: it contributes nothing to B or A.
struct TransitionTable {
    std::vector<std::string> variables;
    std::vector<Transition> entries;

    std::size_t dimension() const noexcept { return variables.size(); }
    /// Throws ConfigError on an empty table, a dimension outside {2, 3} or a
    /// change vector of the wrong length.
    void validate() const;
};

/// B = sum_i rate_i * dY^i.
std::vector<Expression> build_drift(const TransitionTable& table);

/// A = sum_i rate_i * dY^i (dY^i)^T, returned row-major (d*d). Entry (k,l)
/// and (l,k) are the same expression object.
std::vector<Expression> build_diffusion(const TransitionTable& table);

/// Samples every rate on an interior grid of `domain` and returns one message
/// per rate that goes negative somewhere (warnings only).
std::vector<std::string> check_rates(const TransitionTable& table, const BoxDomain& domain,
                                     std::size_t samples_per_axis = 5);

/// Pointwise coefficients of the generator, as used by assembly and simulation.
struct Coefficients {
    std::array<std::array<double, kMaxDim>, kMaxDim> a{};  ///< diffusion matrix
    std::array<double, kMaxDim> div_a{};                   ///< sum_j d a_ij / d x_j
    std::array<double, kMaxDim> b{};                       ///< drift
};

/// Drift B, symmetric diffusion A and the derivative table d a_ij / d x_j
/// over named state variables. Immutable.
class SdeModel {
public:
    /// `diffusion` is row-major d*d; only the upper triangle is read and the
    /// lower triangle mirrors it, so A is symmetric by construction.
    SdeModel(std::string name, std::vector<std::string> variables, std::vector<Expression> drift,
             const std::vector<Expression>& diffusion, ParameterMap parameters = {});

    static SdeModel from_table(std::string name, const TransitionTable& table,
                               ParameterMap parameters = {});

    const std::string& name() const noexcept { return name_; }
    std::size_t dimension() const noexcept { return variables_.size(); }
    const std::vector<std::string>& variables() const noexcept { return variables_; }
    const ParameterMap& parameters() const noexcept { return parameters_; }

    const Expression& drift(std::size_t i) const { return drift_[i]; }
    const Expression& diffusion(std::size_t i, std::size_t j) const { return diffusion_[i * dim() + j]; }
    /// d a_ij / d x_j (no summation).
    const Expression& derivative(std::size_t i, std::size_t j) const { return derivative_[i * dim() + j]; }

    /// Throws EvaluationError if a coefficient is undefined at `point`.
    Coefficients coefficients(std::span<const double> point) const;
    /// Diffusion matrix only (row-major in `out`, size d*d).
    void diffusion_at(std::span<const double> point, std::span<double> out) const;
    void drift_at(std::span<const double> point, std::span<double> out) const;

private:
    std::size_t dim() const noexcept { return variables_.size(); }

    std::string name_;
    std::vector<std::string> variables_;
    std::vector<Expression> drift_;
    std::vector<Expression> diffusion_;
    std::vector<Expression> derivative_;
    ParameterMap parameters_;
};

// ---------------------------------------------------------------------------
// Built-in models

struct NamedDomain {
    std::string label;
    std::vector<double> lower;
    std::vector<double> upper;
};

struct BuiltinInfo {
    std::string name;
    std::string description;
    std::vector<std::string> variables;
    ParameterMap defaults;
    /// Other reference values for a parameter, e.g. the second gonorrhea alpha.
    std::vector<std::pair<std::string, double>> alternatives;
    std::vector<NamedDomain> domains;  ///< first one is the default
    std::vector<double> probe;
};

const std::vector<BuiltinInfo>& builtin_models();
/// Throws ConfigError for an unknown name.
const BuiltinInfo& builtin_info(std::string_view name);

/// The transition table for table-built models (rumor, tumor); nullopt for
/// models defined directly by B and A (gonorrhea, sir).
std::optional<TransitionTable> builtin_table(std::string_view name, const ParameterMap& overrides = {});

/// Throws ConfigError for an unknown model or override key.
SdeModel builtin_model(std::string_view name, const ParameterMap& overrides = {});

/// Resolved parameter set: defaults with overrides applied.
ParameterMap builtin_parameters(std::string_view name, const ParameterMap& overrides);

// ---------------------------------------------------------------------------
// Positive-definiteness check

struct SpdReport {
    std::size_t samples = 0;
    std::size_t flagged = 0;  ///< points with min eigenvalue <= 0 (or undefined A)
    double min_eigenvalue = 0.0;
    std::vector<double> argmin;
    std::vector<std::string> errors;

    bool ok() const noexcept { return flagged == 0; }
};

/// Eigenvalues of a symmetric 2x2 or 3x3 matrix (row-major), ascending.
std::vector<double> symmetric_eigenvalues(std::span<const double> matrix, std::size_t n);

/// Evaluates A on the interior grid lower + (i+1)/(n+1)*extent, i < n, per axis.
/// A point is flagged when its smallest eigenvalue is <= 1e-12 times its
/// largest magnitude eigenvalue.
SpdReport validate_spd(const SdeModel& model, const BoxDomain& domain, std::size_t samples_per_axis);

}  // namespace exitfem
