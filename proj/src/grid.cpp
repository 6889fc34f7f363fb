#include "cbody/grid.hpp"

#include <cmath>

#include <string>

namespace cbody {

Face parse_face(std::string_view name) {
    if (name == "x-min") return Face::XMin;
    if (name == "x-max") return Face::XMax;
    if (name == "y-min") return Face::YMin;
    if (name == "y-max") return Face::YMax;
    if (name == "z-min") return Face::ZMin;
    if (name == "z-max") return Face::ZMax;
    throw ConfigError("unknown face '" + std::string(name) + "'");
}

std::string_view face_name(Face f) {
    switch (f) {
    case Face::XMin: return "x-min";
    case Face::XMax: return "x-max";
    case Face::YMin: return "y-min";
    case Face::YMax: return "y-max";
    case Face::ZMin: return "z-min";
    case Face::ZMax: return "z-max";
    }
    return "?";
}

ReferenceGrid::ReferenceGrid(int dim, std::array<int, 3> cells, VecD origin, VecD extents,
                             std::array<FaceCondition, 6> faces)
    : dim_(dim), cells_(cells), origin_(std::move(origin)), extents_(std::move(extents)), faces_(faces) {
    if (dim_ != 2 && dim_ != 3) throw ConfigError("grid dimension must be 2 or 3");
    if (origin_.size() != dim_ || extents_.size() != dim_) {
        throw ConfigError("grid origin/extents must have " + std::to_string(dim_) + " entries");
    }
    if (dim_ == 2) cells_[2] = 1;
    spacing_.resize(dim_);
    cell_volume_ = 1.0;
    node_count_ = 1;
    cell_count_ = 1;
    for (int a = 0; a < dim_; ++a) {
        if (cells_[a] < 1) throw ConfigError("cells per axis must be positive");
        if (!(extents_[a] > 0.0)) throw ConfigError("grid extents must be positive");
        spacing_[a] = extents_[a] / cells_[a];
        cell_volume_ *= spacing_[a];
        node_count_ *= cells_[a] + 1;
        cell_count_ *= cells_[a];
    }
    for (int f = 2 * dim_; f < 6; ++f) faces_[f] = FaceCondition{};

    dirichlet_u_.assign(node_count_, 0);
    dirichlet_nu_.assign(node_count_, 0);
    for (long n = 0; n < node_count_; ++n) {
        const auto ijk = node_ijk(n);
        for (int a = 0; a < dim_; ++a) {
            const FaceCondition* hit = nullptr;
            if (ijk[a] == 0) hit = &faces_[2 * a];
            if (ijk[a] == cells_[a]) hit = &faces_[2 * a + 1];
            if (!hit) continue;
            dirichlet_u_[n] |= hit->dirichlet_u;
            dirichlet_nu_[n] |= hit->dirichlet_nu;
        }
    }

    const long stride[3] = {1, cells_[0] + 1, static_cast<long>(cells_[0] + 1) * (cells_[1] + 1)};
    const int corners = 1 << dim_;
    for (int l = 0; l < corners; ++l) {
        corner_offset_[l] = 0;
        for (int a = 0; a < dim_; ++a) corner_offset_[l] += ((l >> a) & 1) * stride[a];
    }
    const double g = 1.0 / std::sqrt(3.0);
    for (int q = 0; q < corners; ++q) {
        for (int l = 0; l < corners; ++l) {
            double factors[3], dfactors[3];
            for (int a = 0; a < dim_; ++a) {
                const double xi = ((q >> a) & 1) ? g : -g;
                const double sign = ((l >> a) & 1) ? 1.0 : -1.0;
                factors[a] = 0.5 * (1.0 + sign * xi);
                dfactors[a] = sign / spacing_[a];
            }
            double v = 1.0;
            for (int a = 0; a < dim_; ++a) v *= factors[a];
            gauss_phi_[q][l] = v;
            for (int a = 0; a < dim_; ++a) {
                double dg = dfactors[a];
                for (int b = 0; b < dim_; ++b) {
                    if (b != a) dg *= factors[b];
                }
                gauss_dphi_[q][l][a] = dg;
            }
        }
    }
}

double ReferenceGrid::volume() const { return cell_volume_ * static_cast<double>(cell_count_); }

std::array<int, 3> ReferenceGrid::node_ijk(long node) const {
    std::array<int, 3> ijk{0, 0, 0};
    const int nx = cells_[0] + 1;
    const int ny = cells_[1] + 1;
    ijk[0] = static_cast<int>(node % nx);
    ijk[1] = static_cast<int>((node / nx) % ny);
    if (dim_ == 3) ijk[2] = static_cast<int>(node / (static_cast<long>(nx) * ny));
    return ijk;
}

long ReferenceGrid::node_index(std::array<int, 3> ijk) const {
    const long nx = cells_[0] + 1;
    const long ny = cells_[1] + 1;
    return ijk[0] + nx * (ijk[1] + ny * (dim_ == 3 ? ijk[2] : 0));
}

std::array<int, 3> ReferenceGrid::cell_ijk(long cell) const {
    std::array<int, 3> ijk{0, 0, 0};
    ijk[0] = static_cast<int>(cell % cells_[0]);
    ijk[1] = static_cast<int>((cell / cells_[0]) % cells_[1]);
    if (dim_ == 3) ijk[2] = static_cast<int>(cell / (static_cast<long>(cells_[0]) * cells_[1]));
    return ijk;
}

long ReferenceGrid::cell_index(std::array<int, 3> ijk) const {
    return ijk[0] + static_cast<long>(cells_[0]) * (ijk[1] + static_cast<long>(cells_[1]) * (dim_ == 3 ? ijk[2] : 0));
}

VecD ReferenceGrid::node_position(long node) const {
    const auto ijk = node_ijk(node);
    VecD x(dim_);
    for (int a = 0; a < dim_; ++a) x[a] = origin_[a] + spacing_[a] * ijk[a];
    return x;
}

long ReferenceGrid::cell_base(long cell) const {
    const long cx = cells_[0];
    const long nx = cx + 1;
    if (dim_ == 2) return cell % cx + nx * (cell / cx);
    const long cy = cells_[1];
    const long ny = cy + 1;
    const long i = cell % cx;
    const long rest = cell / cx;
    return i + nx * (rest % cy + ny * (rest / cy));
}

VecD ReferenceGrid::cell_lower_corner(long cell) const {
    const auto ijk = cell_ijk(cell);
    VecD x(dim_);
    for (int a = 0; a < dim_; ++a) x[a] = origin_[a] + spacing_[a] * ijk[a];
    return x;
}

bool ReferenceGrid::is_boundary_node(long node) const {
    const auto ijk = node_ijk(node);
    for (int a = 0; a < dim_; ++a) {
        if (ijk[a] == 0 || ijk[a] == cells_[a]) return true;
    }
    return false;
}

double ReferenceGrid::node_volume(long node) const {
    const auto ijk = node_ijk(node);
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) {
        const bool end = ijk[a] == 0 || ijk[a] == cells_[a];
        v *= end ? 0.5 * spacing_[a] : spacing_[a];
    }
    return v;
}

int ReferenceGrid::adjacent_cells(long node, std::array<long, 8>& cells, std::array<int, 8>& local) const {
    const auto ijk = node_ijk(node);
    int count = 0;
    // Iterating the offset bits from "upper" to "lower" neighbour along the
    // slowest axis first keeps the cell indices increasing.
    const int corners = 1 << dim_;
    for (int m = corners - 1; m >= 0; --m) {
        std::array<int, 3> c = ijk;
        bool inside = true;
        for (int a = 0; a < dim_; ++a) {
            const int shift = (m >> a) & 1; // 1: cell below the node along axis a
            c[a] -= shift;
            if (c[a] < 0 || c[a] >= cells_[a]) inside = false;
        }
        if (!inside) continue;
        cells[count] = cell_index(c);
        local[count] = m;
        ++count;
    }
    return count;
}

Part Part::whole(const ReferenceGrid& grid) { return Part(std::vector<char>(grid.cell_count(), 1)); }

Part Part::box(const ReferenceGrid& grid, std::array<int, 3> lo, std::array<int, 3> hi) {
    std::vector<char> mask(grid.cell_count(), 0);
    for (long c = 0; c < grid.cell_count(); ++c) {
        const auto ijk = grid.cell_ijk(c);
        bool in = true;
        for (int a = 0; a < grid.dim(); ++a) in = in && ijk[a] >= lo[a] && ijk[a] < hi[a];
        mask[c] = in;
    }
    return Part(std::move(mask));
}

Part Part::from_mask(std::vector<char> mask) { return Part(std::move(mask)); }

long Part::cell_count() const {
    long n = 0;
    for (char m : mask_) n += m != 0;
    return n;
}

std::vector<long> Part::nodes(const ReferenceGrid& grid) const {
    std::vector<char> touched(grid.node_count(), 0);
    for (long c = 0; c < grid.cell_count(); ++c) {
        if (!mask_[c]) continue;
        for (int l = 0; l < grid.nodes_per_cell(); ++l) touched[grid.cell_node(c, l)] = 1;
    }
    std::vector<long> out;
    for (long n = 0; n < grid.node_count(); ++n) {
        if (touched[n]) out.push_back(n);
    }
    return out;
}

bool Part::is_interior_node(const ReferenceGrid& grid, long node) const {
    std::array<long, 8> cells{};
    std::array<int, 8> local{};
    const int count = grid.adjacent_cells(node, cells, local);
    if (count != grid.nodes_per_cell()) return false;
    for (int i = 0; i < count; ++i) {
        if (!mask_[cells[i]]) return false;
    }
    return true;
}

bool Part::disjoint_from(const Part& other) const {
    for (std::size_t c = 0; c < mask_.size(); ++c) {
        if (mask_[c] && other.mask_[c]) return false;
    }
    return true;
}

Part Part::united_with(const Part& other) const {
    std::vector<char> mask(mask_.size());
    for (std::size_t c = 0; c < mask_.size(); ++c) mask[c] = mask_[c] || other.mask_[c];
    return Part(std::move(mask));
}

} // namespace cbody
