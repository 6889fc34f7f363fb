#pragma once

#include "cbody/types.hpp"

#include <array>
#include <string_view>
#include <vector>

namespace cbody {

enum class Face { XMin, XMax, YMin, YMax, ZMin, ZMax };

Face parse_face(std::string_view name);
std::string_view face_name(Face f);

/// Which fields are prescribed on one face of the box.
struct FaceCondition {
    bool dirichlet_u = false;
    bool dirichlet_nu = false;
};

/// Uniform Cartesian grid over an axis-aligned box. Nodes are numbered
/// with the x index varying fastest, then y, then z.
class ReferenceGrid {
public:
    ReferenceGrid(int dim, std::array<int, 3> cells, VecD origin, VecD extents,
                  std::array<FaceCondition, 6> faces = {});

    int dim() const { return dim_; }
    int cells_along(int axis) const { return cells_[axis]; }
    int nodes_along(int axis) const { return cells_[axis] + 1; }
    const VecD& origin() const { return origin_; }
    const VecD& extents() const { return extents_; }
    const VecD& spacing() const { return spacing_; }
    double cell_volume() const { return cell_volume_; }
    double volume() const;
    const std::array<FaceCondition, 6>& faces() const { return faces_; }

    long node_count() const { return node_count_; }
    long cell_count() const { return cell_count_; }
    int nodes_per_cell() const { return 1 << dim_; }
    int quadrature_points_per_cell() const { return 1 << dim_; }

    std::array<int, 3> node_ijk(long node) const;
    long node_index(std::array<int, 3> ijk) const;
    std::array<int, 3> cell_ijk(long cell) const;
    long cell_index(std::array<int, 3> ijk) const;

    VecD node_position(long node) const;
    /// Node `local` of `cell`; bit b of `local` selects the upper node along axis b.
    long cell_node(long cell, int local) const { return cell_base(cell) + corner_offset_[local]; }
    /// Lowest-numbered node of `cell`.
    long cell_base(long cell) const;
    long corner_offset(int local) const { return corner_offset_[local]; }

    /// Shape-function value and physical gradient of local node `l` at Gauss point `q`.
    double gauss_phi(int q, int l) const { return gauss_phi_[q][l]; }
    double gauss_dphi(int q, int l, int axis) const { return gauss_dphi_[q][l][axis]; }
    VecD cell_lower_corner(long cell) const;

    bool is_boundary_node(long node) const;
    bool dirichlet_u(long node) const { return dirichlet_u_[node] != 0; }
    bool dirichlet_nu(long node) const { return dirichlet_nu_[node] != 0; }

    /// Integral of the nodal hat function.
    double node_volume(long node) const;

    /// Cells touching `node`, in increasing cell index. Returns the count.
    int adjacent_cells(long node, std::array<long, 8>& cells, std::array<int, 8>& local) const;

private:
    int dim_;
    std::array<int, 3> cells_;
    VecD origin_;
    VecD extents_;
    VecD spacing_;
    double cell_volume_;
    long node_count_;
    long cell_count_;
    std::array<FaceCondition, 6> faces_;
    std::vector<char> dirichlet_u_;
    std::vector<char> dirichlet_nu_;
    std::array<long, 8> corner_offset_{};
    double gauss_phi_[8][8] = {};
    double gauss_dphi_[8][8][3] = {};
};

/// A part of the body: a union of grid cells.
class Part {
public:
    static Part whole(const ReferenceGrid& grid);
    /// Cells with lo[axis] <= ijk[axis] < hi[axis].
    static Part box(const ReferenceGrid& grid, std::array<int, 3> lo, std::array<int, 3> hi);
    static Part from_mask(std::vector<char> mask);

    bool contains(long cell) const { return mask_[cell] != 0; }
    long cell_count() const;
    const std::vector<char>& mask() const { return mask_; }

    /// Nodes touched by the part's cells, in increasing order.
    std::vector<long> nodes(const ReferenceGrid& grid) const;
    /// True when every cell around `node` exists and belongs to the part.
    bool is_interior_node(const ReferenceGrid& grid, long node) const;

    bool disjoint_from(const Part& other) const;
    Part united_with(const Part& other) const;

private:
    explicit Part(std::vector<char> mask) : mask_(std::move(mask)) {}
    std::vector<char> mask_;
};

} // namespace cbody
