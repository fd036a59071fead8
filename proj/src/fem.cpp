#include "exitfem/fem.hpp"

#include "exitfem/error.hpp"

#include <cmath>

namespace exitfem {

namespace {

std::vector<std::uint8_t> boundary_mask(const SimplicialMesh& mesh) {
    std::vector<std::uint8_t> mask(mesh.node_count());
    for (std::size_t i = 0; i < mesh.node_count(); ++i) mask[i] = mesh.is_boundary(i) ? 1 : 0;
    return mask;
}

}  // namespace

AssembledSystem assemble_elliptic(const SimplicialMesh& mesh, const SdeModel& model) {
    const std::size_t d = mesh.dimension();
    if (model.dimension() != d) throw ConfigError("model and mesh dimensions differ");
    const std::size_t nv = d + 1;
    const double share = 1.0 / static_cast<double>(nv);

    AssembledSystem sys;
    sys.rhs.assign(mesh.node_count(), 0.0);
    sys.dirichlet = boundary_mask(mesh);

    std::vector<Triplet> triplets;
    triplets.reserve(mesh.element_count() * nv * nv);
    std::array<double, kMaxDim> centroid{};
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const auto el = mesh.element(e);
        centroid.fill(0.0);
        for (std::size_t a = 0; a < nv; ++a) {
            const auto p = mesh.node(el[a]);
            for (std::size_t c = 0; c < d; ++c) centroid[c] += p[c] * share;
        }
        Coefficients k;
        try {
            k = model.coefficients(std::span<const double>(centroid.data(), d));
        } catch (const EvaluationError& err) {
            throw EvaluationError("coefficient undefined in element " + std::to_string(e) + " (" +
                                      err.what() + ")",
                                  err.point());
        }
        const SimplexGeometry g = simplex_geometry(mesh, e);
        const double vol = std::abs(g.volume);
        const double wvol = vol * share;

        // Per trial function b: A grad(phi_b) and the first-order coefficient.
        std::array<std::array<double, kMaxDim>, 4> agrad{};
        std::array<double, 4> first{};
        for (std::size_t b = 0; b < nv; ++b) {
            double f = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < d; ++j) s += k.a[i][j] * g.gradients[b][j];
                agrad[b][i] = s;
                f += (0.5 * k.div_a[i] - k.b[i]) * g.gradients[b][i];
            }
            first[b] = f;
        }
        for (std::size_t a = 0; a < nv; ++a) {
            for (std::size_t b = 0; b < nv; ++b) {
                double diff = 0.0;
                for (std::size_t i = 0; i < d; ++i) diff += g.gradients[a][i] * agrad[b][i];
                triplets.push_back({el[a], el[b], 0.5 * vol * diff + wvol * first[b]});
            }
            sys.rhs[el[a]] += wvol;
        }
    }
    sys.matrix = SparseMatrix::from_triplets(mesh.node_count(), std::move(triplets));
    return sys;
}

AssembledSystem apply_dirichlet(AssembledSystem system, double g) {
    system.matrix.set_identity_rows(system.dirichlet);
    for (std::size_t i = 0; i < system.rhs.size(); ++i) {
        if (system.dirichlet[i]) system.rhs[i] = g;
    }
    system.boundary_value = g;
    system.constrained = true;
    return system;
}

SparseMatrix assemble_mass(const SimplicialMesh& mesh) {
    const std::size_t d = mesh.dimension();
    const std::size_t nv = d + 1;
    const double denom = static_cast<double>(nv * (nv + 1));
    std::vector<Triplet> triplets;
    triplets.reserve(mesh.element_count() * nv * nv);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const auto el = mesh.element(e);
        const double vol = std::abs(simplex_geometry(mesh, e).volume);
        for (std::size_t a = 0; a < nv; ++a) {
            for (std::size_t b = 0; b < nv; ++b) {
                triplets.push_back({el[a], el[b], vol * (a == b ? 2.0 : 1.0) / denom});
            }
        }
    }
    return SparseMatrix::from_triplets(mesh.node_count(), std::move(triplets));
}

ParabolicSystem assemble_parabolic_step(const SimplicialMesh& mesh, const SdeModel& model, double eta) {
    if (!(eta > 0.0)) throw ConfigError("time step eta must be positive");
    AssembledSystem op = assemble_elliptic(mesh, model);
    ParabolicSystem sys;
    sys.mass = assemble_mass(mesh);
    sys.step = sys.mass.add_scaled(eta, op.matrix);
    sys.step.set_identity_rows(op.dirichlet);
    sys.dirichlet = std::move(op.dirichlet);
    sys.eta = eta;
    return sys;
}

}  // namespace exitfem
