#pragma once

#include "equips/grid.hpp"

namespace equips {

/// Face (6), face+edge (18) or full (26) voxel adjacency.
enum class Connectivity : int { faces = 6, edges = 18, corners = 26 };

Connectivity connectivity_from_int(int neighbours);

/// Labels the inside voxels of `seg`. Labels are assigned in order of the
/// first voxel of each component in linear (x-fastest) order, so the result
/// is deterministic.
LabelGrid connected_components(const PhaseGrid &seg,
                               Connectivity connectivity = Connectivity::faces);

/// True when one inside component touches both faces normal to `axis`.
bool percolation_check(const PhaseGrid &seg, Axis axis,
                       Connectivity connectivity = Connectivity::faces);

} // namespace equips
