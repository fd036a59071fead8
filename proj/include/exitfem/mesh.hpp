#pragma once

#include "exitfem/box.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace exitfem {

using NodeIndex = std::uint32_t;

/// Structured simplicial mesh of a box: each grid cell is split into 2
/// triangles (2D, along the (0,0)-(1,1) diagonal) or 6 Kuhn tetrahedra (3D,
/// one per ordering of the local coordinates). Every element is stored with
/// positive orientation.
class SimplicialMesh {
public:
    SimplicialMesh(BoxDomain domain, std::vector<std::size_t> divisions);

    const BoxDomain& domain() const noexcept { return domain_; }
    std::size_t dimension() const noexcept { return domain_.dimension(); }
    const std::vector<std::size_t>& divisions() const noexcept { return divisions_; }

    std::size_t node_count() const noexcept { return boundary_.size(); }
    std::size_t element_count() const noexcept { return elements_.size() / (dimension() + 1); }

    std::span<const double> node(std::size_t i) const {
        return {coords_.data() + i * dimension(), dimension()};
    }
    std::span<const NodeIndex> element(std::size_t e) const {
        return {elements_.data() + e * (dimension() + 1), dimension() + 1};
    }
    bool is_boundary(std::size_t i) const { return boundary_[i] != 0; }

    /// Grid index of a node along `axis`.
    std::size_t grid_index(std::size_t node, std::size_t axis) const;
    std::size_t node_at(std::span<const std::size_t> grid) const;

    /// Signed volume (area in 2D) of element `e` under its stored vertex order.
    double signed_volume(std::size_t e) const;

    /// Writes "x y [z]" node rows, a blank line, then element index rows.
    void write_text(std::ostream& os) const;

private:
    BoxDomain domain_;
    std::vector<std::size_t> divisions_;
    std::vector<double> coords_;
    std::vector<NodeIndex> elements_;
    std::vector<std::uint8_t> boundary_;
};

/// Volume and constant barycentric gradients of one P1 element.
struct SimplexGeometry {
    double volume = 0.0;  ///< signed
    std::array<std::array<double, 3>, 4> gradients{};  ///< grad lambda_a, a <= d
};

SimplexGeometry simplex_geometry(const SimplicialMesh& mesh, std::size_t element);

/// Uniform mesh with `k` divisions on every axis. Throws ConfigError if k < 1.
SimplicialMesh mesh_box(const BoxDomain& domain, std::size_t k);
/// One division count per axis.
SimplicialMesh mesh_box(const BoxDomain& domain, std::span<const std::size_t> divisions);

struct PointLocation {
    std::size_t element = 0;
    std::array<double, 4> barycentric{};  ///< first d+1 entries used
};

/// Containing element and barycentric coordinates by cell arithmetic.
/// Throws ConfigError if the point is outside the closed box.
PointLocation locate_point(const SimplicialMesh& mesh, std::span<const double> point);

}  // namespace exitfem
