#pragma once

#include <cstdint>

#include "sparsetomo/core.hpp"

namespace sparsetomo {

struct GeometrySpec {
  GeometryKind kind = GeometryKind::hex2d;
  int d = 0;
  int cameras = 0;  // 0 selects the kind's default (3 hex2d, 3 square2d, 4 cube3d)

  /// Throws DomainError when the combination is not constructible.
  void validate() const;
  int effective_cameras() const;
  /// Spatial dimension D (2 for planar geometries, 3 for the cube).
  int dimension() const { return kind == GeometryKind::cube3d ? 3 : 2; }
};

struct PerturbationSpec {
  double low = 0.9;
  double high = 1.1;
  std::uint64_t seed = 0;
  bool normalize_columns = true;

  void validate() const;
};

/// Hexagonal region, three directions at 120 degrees. Cells are the lattice
/// points i1*(sqrt3/2, 1/2) + i2*(0, 1) with |i1|, |i2|, |i1+i2| <= (d-1)/2,
/// ordered lexicographically in (i1, i2). Rays are ordered direction-major:
/// direction 1 collects cells with equal i1, direction 2 equal i2,
/// direction 3 equal i1+i2; within a direction by increasing offset.
IncidenceSystem build_hex2d(int d);

/// Square d x d region with 3..8 cameras at 0, 90, -/+45, -/+arctan 2,
/// -/+arctan 0.5 degrees (in that order). Cell (x, y) has index x*d + y; rays
/// are ordered camera-major, then by pixel.
IncidenceSystem build_square2d(int d, int cameras);

/// Cube [0,d]^3 with four cameras. Cell (i,j,l) in [1,d]^3 has index
/// ((i-1)*d + (j-1))*d + (l-1). Rays are ordered direction-major; each
/// direction has (2d-1)*d pixels (s, t) ordered lexicographically.
IncidenceSystem build_cube3d(int d);

IncidenceSystem build(const GeometrySpec& spec);

/// Jitters every nonzero uniformly on (low, high), then optionally scales each
/// column to unit Euclidean norm. The input must have unit weights.
IncidenceSystem perturb(const IncidenceSystem& a, const PerturbationSpec& spec);

/// Pixel (s, t) of cube cell (i, j, l) along direction 1..4.
struct CubePixel {
  int s;
  int t;
};
CubePixel cube_pixel(int d, int direction, int i, int j, int l);

/// Number of pixels of square2d camera `camera` (0-based, order as above).
Index square_camera_pixels(int d, int camera);

/// Closed-form row count of the square2d system with the given cameras.
Index square_rows(int d, int cameras);

}  // namespace sparsetomo
