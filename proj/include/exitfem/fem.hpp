#pragma once

#include "exitfem/linalg.hpp"
#include "exitfem/mesh.hpp"
#include "exitfem/model.hpp"

#include <cstdint>
#include <vector>

namespace exitfem {

/// Matrix, load vector and Dirichlet node mask of a P1 discretization.
struct AssembledSystem {
    SparseMatrix matrix;
    std::vector<double> rhs;
    std::vector<std::uint8_t> dirichlet;  ///< 1 for boundary nodes
    double boundary_value = 0.0;
    bool constrained = false;             ///< set by apply_dirichlet
};

/// Assembles the weak form of  L u = -1  with
///
///   G(u, w) = 1/2 sum_ij a_ij du/dx_i dw/dx_j
///           + 1/2 sum_ij w du/dx_i d a_ij/dx_j
///           - sum_i b_i w du/dx_i,          F(w) = w.
///
/// Coefficients are frozen at element centroids; terms with a bare w use
/// int_K phi = |K|/(d+1). No boundary conditions are imposed.
/// Throws EvaluationError naming the element if a coefficient is undefined.
AssembledSystem assemble_elliptic(const SimplicialMesh& mesh, const SdeModel& model);

/// Replaces every boundary row by an identity row with right-hand side g.
/// Interior rows keep their couplings to boundary columns.
AssembledSystem apply_dirichlet(AssembledSystem system, double g = 0.0);

/// Consistent P1 mass matrix, entries |K| (1 + delta_ab) / ((d+1)(d+2)).
SparseMatrix assemble_mass(const SimplicialMesh& mesh);

struct ParabolicSystem {
    SparseMatrix step;                    ///< eta * G + M, boundary rows replaced by identity
    SparseMatrix mass;                    ///< M, unconstrained
    std::vector<std::uint8_t> dirichlet;
    double eta = 0.0;
};

/// Implicit Euler step system: (eta G + M) u^{m+1} = M u^m, u = 0 on the boundary.
ParabolicSystem assemble_parabolic_step(const SimplicialMesh& mesh, const SdeModel& model, double eta);

}  // namespace exitfem
