#include "doctest.h"

#include "exitfem/error.hpp"
#include "exitfem/mesh.hpp"
#include "support.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

using namespace exitfem;

namespace {

BoxDomain box2() { return BoxDomain({0.7, 0.1}, {0.9, 0.3}); }
BoxDomain box3() { return BoxDomain({0, 0, 0}, {4, 2, 4}); }

bool on_boundary(const BoxDomain& box, std::span<const double> p) {
    for (std::size_t i = 0; i < box.dimension(); ++i) {
        const double tol = 1e-12 * box.extent(i);
        if (std::abs(p[i] - box.lower(i)) <= tol || std::abs(p[i] - box.upper(i)) <= tol) return true;
    }
    return false;
}

// Every facet of every element, vertex-sorted, then grouped.
void check_conformity(const SimplicialMesh& mesh) {
    const std::size_t d = mesh.dimension();
    std::vector<std::array<NodeIndex, 3>> facets;
    facets.reserve(mesh.element_count() * (d + 1));
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const auto el = mesh.element(e);
        for (std::size_t skip = 0; skip <= d; ++skip) {
            std::array<NodeIndex, 3> f{0, 0, 0};
            std::size_t n = 0;
            for (std::size_t a = 0; a <= d; ++a) {
                if (a != skip) f[n++] = el[a];
            }
            std::sort(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(d));
            facets.push_back(f);
        }
    }
    std::sort(facets.begin(), facets.end());
    std::size_t bad = 0;
    for (std::size_t i = 0; i < facets.size();) {
        std::size_t j = i;
        while (j < facets.size() && facets[j] == facets[i]) ++j;
        const std::size_t count = j - i;
        // A facet lies on the boundary iff all its vertices share a face plane.
        bool boundary_facet = false;
        for (std::size_t axis = 0; axis < d && !boundary_facet; ++axis) {
            for (double plane : {mesh.domain().lower(axis), mesh.domain().upper(axis)}) {
                bool all = true;
                for (std::size_t a = 0; a < d; ++a) all = all && mesh.node(facets[i][a])[axis] == plane;
                boundary_facet = boundary_facet || all;
            }
        }
        if (count != (boundary_facet ? 1u : 2u)) ++bad;
        i = j;
    }
    CHECK(bad == 0);
}

void check_mesh(const BoxDomain& box, std::size_t k) {
    const SimplicialMesh mesh = mesh_box(box, k);
    const std::size_t d = box.dimension();
    const std::size_t nodes = d == 2 ? (k + 1) * (k + 1) : (k + 1) * (k + 1) * (k + 1);
    const std::size_t elements = d == 2 ? 2 * k * k : 6 * k * k * k;
    INFO("d=" << d << " k=" << k);
    CHECK(mesh.node_count() == nodes);
    CHECK(mesh.element_count() == elements);

    // Neumaier summation: 384000 equal terms drift by ~1e-11 when added naively.
    double volume = 0.0, carry = 0.0;
    std::size_t nonpositive = 0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const double v = mesh.signed_volume(e);
        if (!(v > 0.0)) ++nonpositive;
        const double t = volume + v;
        carry += std::abs(volume) >= std::abs(v) ? (volume - t) + v : (v - t) + volume;
        volume = t;
    }
    volume += carry;
    CHECK(nonpositive == 0);
    CHECK(std::abs(volume - box.volume()) <= 1e-12 * box.volume());

    std::size_t flag_mismatch = 0, boundary = 0;
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        if (mesh.is_boundary(i) != on_boundary(box, mesh.node(i))) ++flag_mismatch;
        boundary += mesh.is_boundary(i);
    }
    CHECK(flag_mismatch == 0);
    const std::size_t interior = d == 2 ? (k - 1) * (k - 1) : (k - 1) * (k - 1) * (k - 1);
    CHECK(boundary == nodes - interior);
    check_conformity(mesh);
}

}  // namespace

TEST_CASE("mesh invariants for k in {1, 2, 5, 40}") {
    for (std::size_t k : {1u, 2u, 5u, 40u}) {
        check_mesh(box2(), k);
        check_mesh(BoxDomain({0, 0}, {1, 1}), k);
        check_mesh(box3(), k);
    }
}

TEST_CASE("small meshes") {
    const SimplicialMesh one = mesh_box(BoxDomain({0, 0}, {1, 1}), 1);
    CHECK(one.node_count() == 4);
    CHECK(one.element_count() == 2);
    for (std::size_t i = 0; i < 4; ++i) CHECK(one.is_boundary(i));

    const SimplicialMesh two = mesh_box(BoxDomain({0, 0}, {1, 1}), 2);
    CHECK(two.node_count() == 9);
    std::size_t interior = 0;
    for (std::size_t i = 0; i < 9; ++i) interior += !two.is_boundary(i);
    CHECK(interior == 1);

    const SimplicialMesh tumor = mesh_box(box3(), 40);
    CHECK(tumor.node_count() == 68921);
    CHECK(tumor.element_count() == 384000);

    CHECK_THROWS_AS(mesh_box(BoxDomain({0, 0}, {1, 1}), 0), ConfigError);
    CHECK_THROWS_AS(BoxDomain({0, 0}, {0, 1}), ConfigError);
    CHECK_THROWS_AS(BoxDomain({0}, {1}), ConfigError);
}

TEST_CASE("per-axis divisions and node numbering") {
    const std::vector<std::size_t> div{4, 2, 3};
    const SimplicialMesh m = mesh_box(box3(), div);
    CHECK(m.node_count() == 5 * 3 * 4);
    CHECK(m.element_count() == 6 * 4 * 2 * 3);
    for (std::size_t i = 0; i < m.node_count(); ++i) {
        std::array<std::size_t, 3> g{m.grid_index(i, 0), m.grid_index(i, 1), m.grid_index(i, 2)};
        CHECK(m.node_at(g) == i);
        for (std::size_t a = 0; a < 3; ++a) {
            CHECK(m.node(i)[a] == doctest::Approx(box3().lower(a) + box3().extent(a) * g[a] / div[a]));
        }
    }
    // The last grid plane sits exactly on the upper face.
    CHECK(m.node(m.node_count() - 1)[2] == 4.0);
}

TEST_CASE("simplex geometry gradients are those of the barycentric coordinates") {
    const SimplicialMesh m = mesh_box(box3(), 2);
    for (std::size_t e = 0; e < m.element_count(); ++e) {
        const auto g = simplex_geometry(m, e);
        CHECK(g.volume == doctest::Approx(m.signed_volume(e)));
        const auto el = m.element(e);
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = 0; b < 4; ++b) {
                // lambda_a(x_b) - lambda_a(x_0) = grad lambda_a . (x_b - x_0)
                double s = 0.0;
                for (std::size_t i = 0; i < 3; ++i) s += g.gradients[a][i] * (m.node(el[b])[i] - m.node(el[0])[i]);
                const double expected = (a == b ? 1.0 : 0.0) - (a == 0 ? 1.0 : 0.0);
                CHECK(s == doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("point location") {
    for (const BoxDomain& box : {box2(), box3()}) {
        const SimplicialMesh m = mesh_box(box, 5);
        const std::size_t d = box.dimension();
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int t = 0; t < 500; ++t) {
            std::vector<double> p(d);
            for (std::size_t i = 0; i < d; ++i) p[i] = box.lower(i) + u(rng) * box.extent(i);
            const auto loc = locate_point(m, p);
            double sum = 0.0;
            std::vector<double> back(d, 0.0);
            for (std::size_t a = 0; a <= d; ++a) {
                CHECK(loc.barycentric[a] >= -1e-12);
                sum += loc.barycentric[a];
                for (std::size_t i = 0; i < d; ++i) back[i] += loc.barycentric[a] * m.node(m.element(loc.element)[a])[i];
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
            for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(back[i] - p[i]) <= 1e-10 * box.extent(i));
        }

        // A node: one coordinate equals 1.
        const std::size_t node = m.node_count() / 2 + 1;
        const auto at_node = locate_point(m, m.node(node));
        const auto el = m.element(at_node.element);
        bool found = false;
        for (std::size_t a = 0; a <= d; ++a) {
            if (el[a] == node) {
                CHECK(at_node.barycentric[a] == doctest::Approx(1.0).epsilon(1e-12));
                found = true;
            }
        }
        CHECK(found);

        // An element centroid: all coordinates strictly inside (0, 1). A cell
        // centre would sit on the diagonal shared by the cell's simplices.
        const std::size_t probe_element = m.element_count() / 3;
        std::vector<double> centroid(d, 0.0);
        for (std::size_t a = 0; a <= d; ++a) {
            for (std::size_t i = 0; i < d; ++i) centroid[i] += m.node(m.element(probe_element)[a])[i] / static_cast<double>(d + 1);
        }
        const auto c = locate_point(m, centroid);
        CHECK(c.element == probe_element);
        for (std::size_t a = 0; a <= d; ++a) {
            CHECK(c.barycentric[a] > 0.0);
            CHECK(c.barycentric[a] < 1.0);
        }

        std::vector<double> outside(box.upper());
        outside[0] += 0.01 * box.extent(0);
        CHECK_THROWS_AS(locate_point(m, outside), ConfigError);
    }
}

TEST_CASE("text export") {
    const SimplicialMesh m = mesh_box(BoxDomain({0, 0}, {1, 1}), 1);
    std::ostringstream os;
    m.write_text(os);
    CHECK_FALSE(os.str().empty());
}
