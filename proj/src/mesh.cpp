#include "exitfem/mesh.hpp"

#include "exitfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace exitfem {

namespace {

// Kuhn simplices of the unit cube: for ordering (p0, p1, p2) the vertex path
// 0 -> e_p0 -> e_p0 + e_p1 -> 1 bounds the region x_p0 >= x_p1 >= x_p2.
constexpr std::array<std::array<int, 3>, 6> kKuhnOrders = {{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
}};
constexpr std::array<bool, 6> kKuhnOdd = {false, true, true, false, false, true};

std::size_t simplices_per_cell(std::size_t d) { return d == 2 ? 2 : 6; }

}  // namespace

SimplicialMesh::SimplicialMesh(BoxDomain domain, std::vector<std::size_t> divisions)
    : domain_(std::move(domain)), divisions_(std::move(divisions)) {
    const std::size_t d = domain_.dimension();
    if (divisions_.size() != d) throw ConfigError("need one division count per axis");
    for (std::size_t k : divisions_) {
        if (k < 1) throw ConfigError("mesh needs at least 1 division per axis");
    }
    std::size_t nodes = 1, cells = 1;
    for (std::size_t k : divisions_) {
        nodes *= k + 1;
        cells *= k;
    }
    if (nodes > std::size_t{0xffffffffu}) throw ConfigError("mesh too large");

    coords_.resize(nodes * d);
    boundary_.assign(nodes, 0);
    std::vector<std::size_t> g(d, 0);
    for (std::size_t n = 0; n < nodes; ++n) {
        std::size_t rest = n;
        bool on_face = false;
        for (std::size_t a = 0; a < d; ++a) {
            g[a] = rest % (divisions_[a] + 1);
            rest /= divisions_[a] + 1;
            const std::size_t k = divisions_[a];
            double x = domain_.lower(a) + domain_.extent(a) * static_cast<double>(g[a]) / static_cast<double>(k);
            if (g[a] == k) x = domain_.upper(a);
            coords_[n * d + a] = x;
            on_face = on_face || g[a] == 0 || g[a] == k;
        }
        boundary_[n] = on_face ? 1 : 0;
    }

    const std::size_t per_cell = simplices_per_cell(d);
    elements_.reserve(cells * per_cell * (d + 1));
    std::vector<std::size_t> c(d, 0), v(d, 0);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::size_t rest = cell;
        for (std::size_t a = 0; a < d; ++a) {
            c[a] = rest % divisions_[a];
            rest /= divisions_[a];
        }
        auto corner = [&](std::array<int, 3> offset) {
            for (std::size_t a = 0; a < d; ++a) v[a] = c[a] + static_cast<std::size_t>(offset[a]);
            return static_cast<NodeIndex>(node_at(v));
        };
        if (d == 2) {
            const NodeIndex n00 = corner({0, 0, 0}), n10 = corner({1, 0, 0});
            const NodeIndex n01 = corner({0, 1, 0}), n11 = corner({1, 1, 0});
            elements_.insert(elements_.end(), {n00, n10, n11});
            elements_.insert(elements_.end(), {n00, n11, n01});
        } else {
            for (std::size_t s = 0; s < 6; ++s) {
                std::array<int, 3> off{0, 0, 0};
                std::array<NodeIndex, 4> tet{};
                tet[0] = corner(off);
                for (std::size_t step = 0; step < 3; ++step) {
                    off[kKuhnOrders[s][step]] = 1;
                    tet[step + 1] = corner(off);
                }
                if (kKuhnOdd[s]) std::swap(tet[1], tet[2]);
                elements_.insert(elements_.end(), tet.begin(), tet.end());
            }
        }
    }
}

std::size_t SimplicialMesh::grid_index(std::size_t node, std::size_t axis) const {
    std::size_t rest = node;
    for (std::size_t a = 0; a < axis; ++a) rest /= divisions_[a] + 1;
    return rest % (divisions_[axis] + 1);
}

std::size_t SimplicialMesh::node_at(std::span<const std::size_t> grid) const {
    std::size_t idx = 0;
    for (std::size_t a = dimension(); a-- > 0;) idx = idx * (divisions_[a] + 1) + grid[a];
    return idx;
}

double SimplicialMesh::signed_volume(std::size_t e) const { return simplex_geometry(*this, e).volume; }

void SimplicialMesh::write_text(std::ostream& os) const {
    const std::size_t d = dimension();
    const auto old = os.precision(17);
    for (std::size_t n = 0; n < node_count(); ++n) {
        auto p = node(n);
        for (std::size_t a = 0; a < d; ++a) os << (a ? " " : "") << p[a];
        os << '\n';
    }
    os << '\n';
    for (std::size_t e = 0; e < element_count(); ++e) {
        auto el = element(e);
        for (std::size_t a = 0; a <= d; ++a) os << (a ? " " : "") << el[a];
        os << '\n';
    }
    os.precision(old);
}

SimplexGeometry simplex_geometry(const SimplicialMesh& mesh, std::size_t element) {
    const std::size_t d = mesh.dimension();
    const auto el = mesh.element(element);
    const auto v0 = mesh.node(el[0]);
    SimplexGeometry g;
    if (d == 2) {
        const auto v1 = mesh.node(el[1]), v2 = mesh.node(el[2]);
        const double j00 = v1[0] - v0[0], j01 = v2[0] - v0[0];
        const double j10 = v1[1] - v0[1], j11 = v2[1] - v0[1];
        const double det = j00 * j11 - j01 * j10;
        g.volume = 0.5 * det;
        // Rows of J^{-1}.
        g.gradients[1] = {j11 / det, -j01 / det, 0.0};
        g.gradients[2] = {-j10 / det, j00 / det, 0.0};
    } else {
        double j[3][3];
        for (std::size_t c = 0; c < 3; ++c) {
            const auto vc = mesh.node(el[c + 1]);
            for (std::size_t r = 0; r < 3; ++r) j[r][c] = vc[r] - v0[r];
        }
        const double det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
                           j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
                           j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
        g.volume = det / 6.0;
        // inverse = adj(J) / det; gradient a+1 is row a of the inverse.
        for (std::size_t r = 0; r < 3; ++r) {
            for (std::size_t c = 0; c < 3; ++c) {
                const std::size_t r1 = (c + 1) % 3, r2 = (c + 2) % 3;
                const std::size_t c1 = (r + 1) % 3, c2 = (r + 2) % 3;
                g.gradients[r + 1][c] = (j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1]) / det;
            }
        }
    }
    for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0;
        for (std::size_t a = 1; a <= d; ++a) s += g.gradients[a][c];
        g.gradients[0][c] = -s;
    }
    return g;
}

SimplicialMesh mesh_box(const BoxDomain& domain, std::size_t k) {
    return SimplicialMesh(domain, std::vector<std::size_t>(domain.dimension(), k));
}

SimplicialMesh mesh_box(const BoxDomain& domain, std::span<const std::size_t> divisions) {
    return SimplicialMesh(domain, std::vector<std::size_t>(divisions.begin(), divisions.end()));
}

PointLocation locate_point(const SimplicialMesh& mesh, std::span<const double> point) {
    const BoxDomain& box = mesh.domain();
    const std::size_t d = mesh.dimension();
    if (point.size() != d) throw ConfigError("point dimension does not match mesh");
    for (std::size_t a = 0; a < d; ++a) {
        const double tol = 1e-12 * box.extent(a);
        if (!(point[a] >= box.lower(a) - tol && point[a] <= box.upper(a) + tol)) {
            throw ConfigError("point " + format_point({point.begin(), point.end()}) +
                              " lies outside the domain");
        }
    }
    std::array<double, 3> local{};
    std::size_t cell = 0, stride = 1;
    for (std::size_t a = 0; a < d; ++a) {
        const std::size_t k = mesh.divisions()[a];
        const double t = (point[a] - box.lower(a)) / box.extent(a) * static_cast<double>(k);
        const double fl = std::clamp(std::floor(t), 0.0, static_cast<double>(k - 1));
        local[a] = t - fl;
        cell += static_cast<std::size_t>(fl) * stride;
        stride *= k;
    }
    std::size_t sub = 0;
    if (d == 2) {
        sub = local[1] <= local[0] ? 0 : 1;
    } else {
        for (std::size_t s = 0; s < 6; ++s) {
            const auto& o = kKuhnOrders[s];
            if (local[o[0]] >= local[o[1]] && local[o[1]] >= local[o[2]]) {
                sub = s;
                break;
            }
        }
    }
    PointLocation loc;
    loc.element = cell * simplices_per_cell(d) + sub;
    const SimplexGeometry g = simplex_geometry(mesh, loc.element);
    const auto v0 = mesh.node(mesh.element(loc.element)[0]);
    double sum = 0.0;
    for (std::size_t a = 1; a <= d; ++a) {
        double l = 0.0;
        for (std::size_t c = 0; c < d; ++c) l += g.gradients[a][c] * (point[c] - v0[c]);
        loc.barycentric[a] = l;
        sum += l;
    }
    loc.barycentric[0] = 1.0 - sum;
    return loc;
}

}  // namespace exitfem
