#include "sparsetomo/geometry.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "sparsetomo/rng.hpp"

namespace sparsetomo {

void GeometrySpec::validate() const {
  switch (kind) {
    case GeometryKind::hex2d:
      if (d < 3 || d % 2 == 0) {
        throw DomainError("invalid_d", "hex2d requires an odd d >= 3, got " + std::to_string(d));
      }
      if (cameras != 0 && cameras != 3) {
        throw DomainError("invalid_cameras", "hex2d has exactly 3 cameras");
      }
      return;
    case GeometryKind::square2d:
      if (d < 2) throw DomainError("invalid_d", "square2d requires d >= 2, got " + std::to_string(d));
      if (cameras != 0 && (cameras < 3 || cameras > 8)) {
        throw DomainError("invalid_cameras",
                          "square2d requires 3..8 cameras, got " + std::to_string(cameras));
      }
      return;
    case GeometryKind::cube3d:
      if (d < 2) throw DomainError("invalid_d", "cube3d requires d >= 2, got " + std::to_string(d));
      if (cameras != 0 && cameras != 4) {
        throw DomainError("invalid_cameras", "cube3d has exactly 4 cameras");
      }
      return;
    case GeometryKind::external:
      throw DomainError("invalid_kind", "external systems cannot be built from a spec");
  }
}

int GeometrySpec::effective_cameras() const {
  if (cameras != 0) return cameras;
  return kind == GeometryKind::cube3d ? 4 : 3;
}

void PerturbationSpec::validate() const {
  if (!(low > 0.0) || !(low < high) || !std::isfinite(high)) {
    throw DomainError("invalid_interval", "perturbation interval requires 0 < low < high, got (" +
                                              format_double(low) + ", " + format_double(high) + ")");
  }
}

IncidenceSystem build_hex2d(int d) {
  GeometrySpec{GeometryKind::hex2d, d, 0}.validate();
  const int h = (d - 1) / 2;
  std::vector<Entry> entries;
  Index cell = 0;
  for (int i1 = -h; i1 <= h; ++i1) {
    for (int i2 = -h; i2 <= h; ++i2) {
      if (std::abs(i1 + i2) > h) continue;
      entries.push_back({static_cast<Index>(i1 + h), cell, 1.0});
      entries.push_back({static_cast<Index>(d + i2 + h), cell, 1.0});
      entries.push_back({static_cast<Index>(2 * d + i1 + i2 + h), cell, 1.0});
      ++cell;
    }
  }
  return IncidenceSystem(3 * d, cell, std::move(entries), {GeometryKind::hex2d, d, 3, false});
}

namespace {

// Integer projection of cell (x, y) for each square camera together with the
// pixel width in projection units. Offsets make every value nonnegative.
struct SquareCamera {
  int ax, ay, offset, width;
};

SquareCamera square_camera(int d, int camera) {
  const int e = d - 1;
  switch (camera) {
    case 0: return {0, 1, 0, 1};       // 0 deg
    case 1: return {1, 0, 0, 1};       // 90 deg
    case 2: return {1, 1, 0, 1};       // 45 deg
    case 3: return {1, -1, e, 1};      // -45 deg
    case 4: return {2, -1, e + 1, 2};  // arctan 2
    case 5: return {2, 1, 1, 2};       // -arctan 2
    case 6: return {1, -2, 2 * e + 1, 2};  // arctan 0.5
    case 7: return {1, 2, 1, 2};       // -arctan 0.5
    default: break;
  }
  throw DomainError("invalid_cameras", "square camera index out of range");
}

}  // namespace

Index square_camera_pixels(int d, int camera) {
  if (camera < 2) return d;
  if (camera < 4) return 2 * d - 1;
  return d + d / 2;
}

Index square_rows(int d, int cameras) {
  Index m = 0;
  for (int c = 0; c < cameras; ++c) m += square_camera_pixels(d, c);
  return m;
}

IncidenceSystem build_square2d(int d, int cameras) {
  GeometrySpec{GeometryKind::square2d, d, cameras}.validate();
  if (cameras == 0) cameras = 3;
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(d) * d * cameras);
  for (int x = 0; x < d; ++x) {
    for (int y = 0; y < d; ++y) {
      const Index cell = x * d + y;
      Index base = 0;
      for (int cam = 0; cam < cameras; ++cam) {
        const SquareCamera c = square_camera(d, cam);
        // pixel = projected coordinate binned into equal-width bins
        const int u = c.ax * x + c.ay * y + c.offset;
        const int pixel = u / c.width;
        entries.push_back({base + pixel, cell, 1.0});
        base += square_camera_pixels(d, cam);
      }
    }
  }
  return IncidenceSystem(square_rows(d, cameras), d * d, std::move(entries),
                         {GeometryKind::square2d, d, cameras, false});
}

CubePixel cube_pixel(int d, int direction, int i, int j, int l) {
  switch (direction) {
    case 1: return {i + l - 1 - d, j};
    case 2: return {i - l, j};
    case 3: return {i, j + l - 1 - d};
    case 4: return {i, j - l};
    default: break;
  }
  throw DomainError("invalid_direction", "cube direction must be 1..4");
}

IncidenceSystem build_cube3d(int d) {
  GeometrySpec{GeometryKind::cube3d, d, 0}.validate();
  const Index per_direction = (2 * d - 1) * d;
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(d) * d * d * 4);
  Index cell = 0;
  for (int i = 1; i <= d; ++i) {
    for (int j = 1; j <= d; ++j) {
      for (int l = 1; l <= d; ++l) {
        for (int dir = 1; dir <= 4; ++dir) {
          const CubePixel px = cube_pixel(d, dir, i, j, l);
          Index local = 0;
          if (dir <= 2) {
            local = (px.s + d - 1) * d + (px.t - 1);  // s in [1-d, d-1], t in [1, d]
          } else {
            local = (px.s - 1) * (2 * d - 1) + (px.t + d - 1);  // s in [1, d], t in [1-d, d-1]
          }
          entries.push_back({(dir - 1) * per_direction + local, cell, 1.0});
        }
        ++cell;
      }
    }
  }
  return IncidenceSystem(4 * per_direction, cell, std::move(entries),
                         {GeometryKind::cube3d, d, 4, false});
}

IncidenceSystem build(const GeometrySpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case GeometryKind::hex2d: return build_hex2d(spec.d);
    case GeometryKind::square2d: return build_square2d(spec.d, spec.effective_cameras());
    case GeometryKind::cube3d: return build_cube3d(spec.d);
    case GeometryKind::external: break;
  }
  throw DomainError("invalid_kind", "unsupported geometry kind");
}

IncidenceSystem perturb(const IncidenceSystem& a, const PerturbationSpec& spec) {
  spec.validate();
  if (!a.unit_weights()) {
    throw DomainError("already_perturbed", "perturbation expects a unit-weight system");
  }
  Rng rng(spec.seed);
  const double span = spec.high - spec.low;
  std::vector<double> w(a.nnz());
  for (double& v : w) {
    v = spec.low + span * rng.uniform_open();
    // keep the open interval under rounding
    if (v <= spec.low) v = std::nextafter(spec.low, spec.high);
    if (v >= spec.high) v = std::nextafter(spec.high, spec.low);
  }
  if (spec.normalize_columns) {
    const auto deg = static_cast<std::size_t>(a.left_degree());
    for (std::size_t c = 0; c < static_cast<std::size_t>(a.n_cells()); ++c) {
      double norm2 = 0.0;
      for (std::size_t t = 0; t < deg; ++t) norm2 += w[c * deg + t] * w[c * deg + t];
      const double inv = 1.0 / std::sqrt(norm2);
      for (std::size_t t = 0; t < deg; ++t) w[c * deg + t] *= inv;
    }
  }
  GeometryTag tag = a.tag();
  tag.perturbed = true;
  return a.with_weights(std::move(w), tag);
}

}  // namespace sparsetomo
