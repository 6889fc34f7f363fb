#pragma once

#include "cbody/fields.hpp"

#include <cstdint>

namespace cbody {

/// Smooth random fields sampled at the nodes: u = x + a * (sum of sines),
/// nu = retraction of (nu0 + a * sum of sines). The underlying functions
/// depend only on `seed` and the box, so refining the grid samples the
/// same fields.
struct ManufacturedFields {
    DeformationField u;
    MorphField nu;
};

ManufacturedFields manufactured_fields(const ManifoldSpec& spec, const ReferenceGrid& grid, std::uint64_t seed,
                                       double amplitude = 0.1);

} // namespace cbody
