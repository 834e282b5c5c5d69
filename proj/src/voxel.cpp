#include "layoutforge/voxel.hpp"

#include <algorithm>
#include <cmath>

namespace layoutforge {

namespace {

constexpr int kCellBias = 1 << 20;
constexpr CellKey kCellMask = (CellKey{1} << 21) - 1;

// Asset boxes are shrunk by this much before testing world cell centers, so
// boxes that only touch never share a cell.
constexpr double kShrink = 1e-7;

}  // namespace

std::size_t VoxelGrid::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void VoxelGrid::validate() const {
  if (!(cell > 0)) throw Error(ErrorCode::Validation, "voxel: cell must be positive");
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0) {
    throw Error(ErrorCode::Validation, "voxel: dims must be positive");
  }
  if (bits.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]) {
    throw Error(ErrorCode::Validation, "voxel: bit count does not match dims");
  }
}

VoxelGrid VoxelGrid::empty_box(const Vec3& extents, double cell) {
  VoxelGrid g;
  g.cell = cell;
  for (int a = 0; a < 3; ++a) {
    g.dims[a] = std::max(1, static_cast<int>(std::ceil(extents[a] / cell - 1e-9)));
  }
  g.origin = -0.5 * extents;
  g.bits.assign(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2], 0);
  return g;
}

VoxelGrid VoxelGrid::solid_box(const Vec3& extents, double cell) {
  VoxelGrid g = empty_box(extents, cell);
  std::fill(g.bits.begin(), g.bits.end(), std::uint8_t{1});
  return g;
}

void VoxelGrid::carve(const Vec3& lo, const Vec3& hi) {
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 c = cell_center(i, j, k);
        if ((c.array() >= lo.array()).all() && (c.array() <= hi.array()).all()) set(i, j, k, false);
      }
    }
  }
}

CellKey pack_cell(int i, int j, int k) {
  return ((static_cast<CellKey>(i + kCellBias) & kCellMask) << 42) |
         ((static_cast<CellKey>(j + kCellBias) & kCellMask) << 21) |
         (static_cast<CellKey>(k + kCellBias) & kCellMask);
}

std::array<int, 3> unpack_cell(CellKey key) {
  return {static_cast<int>((key >> 42) & kCellMask) - kCellBias,
          static_cast<int>((key >> 21) & kCellMask) - kCellBias,
          static_cast<int>(key & kCellMask) - kCellBias};
}

std::vector<CellKey> occupied_world_cells(const VoxelGrid& grid, const Vec3& extents,
                                          const Pose& pose, double world_cell) {
  const Vec3 half = 0.5 * pose.s.cwiseProduct(extents);
  Vec3 radius;
  for (int a = 0; a < 3; ++a) {
    radius[a] = pose.R.row(a).cwiseAbs().dot(half);
  }
  const Vec3 lo = pose.t - radius;
  const Vec3 hi = pose.t + radius;
  std::array<int, 3> c0, c1;
  for (int a = 0; a < 3; ++a) {
    c0[a] = static_cast<int>(std::floor(lo[a] / world_cell - 0.5));
    c1[a] = static_cast<int>(std::ceil(hi[a] / world_cell - 0.5));
  }
  const Vec3 box_half = 0.5 * extents - Vec3::Constant(kShrink);
  std::vector<CellKey> out;
  for (int i = c0[0]; i <= c1[0]; ++i) {
    for (int j = c0[1]; j <= c1[1]; ++j) {
      for (int k = c0[2]; k <= c1[2]; ++k) {
        const Vec3 center = world_cell * Vec3(i + 0.5, j + 0.5, k + 0.5);
        const Vec3 local = pose.inverse(center);
        if ((local.cwiseAbs().array() > box_half.array()).any()) continue;
        const Vec3 g = (local - grid.origin) / grid.cell;
        const int gi = std::clamp(static_cast<int>(std::floor(g.x())), 0, grid.dims[0] - 1);
        const int gj = std::clamp(static_cast<int>(std::floor(g.y())), 0, grid.dims[1] - 1);
        const int gk = std::clamp(static_cast<int>(std::floor(g.z())), 0, grid.dims[2] - 1);
        if (grid.at(gi, gj, gk)) out.push_back(pack_cell(i, j, k));
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<VoxelFace> exposed_faces(const VoxelGrid& grid, const Vec3& extents) {
  std::vector<VoxelFace> out;
  const Vec3 half = 0.5 * extents;
  for (int a = 0; a < 3; ++a) {
    const int ua = (a + 1) % 3, va = (a + 2) % 3;
    const int nu = grid.dims[ua], nv = grid.dims[va];
    std::vector<std::uint8_t> open(static_cast<std::size_t>(nu) * nv);
    for (int sign : {-1, 1}) {
      for (int s = 0; s < grid.dims[a]; ++s) {
        for (int v = 0; v < nv; ++v) {
          for (int u = 0; u < nu; ++u) {
            std::array<int, 3> c{}, n{};
            c[a] = s, c[ua] = u, c[va] = v;
            n = c;
            n[a] += sign;
            open[static_cast<std::size_t>(v) * nu + u] =
                grid.at(c[0], c[1], c[2]) && !grid.at(n[0], n[1], n[2]);
          }
        }
        const double plane = std::clamp(grid.origin[a] + grid.cell * (s + (sign > 0 ? 1 : 0)), -half[a], half[a]);
        for (int v = 0; v < nv; ++v) {
          for (int u = 0; u < nu; ++u) {
            if (!open[static_cast<std::size_t>(v) * nu + u]) continue;
            int w = 1;
            while (u + w < nu && open[static_cast<std::size_t>(v) * nu + u + w]) ++w;
            int h = 1;
            for (; v + h < nv; ++h) {
              bool full = true;
              for (int k = 0; k < w && full; ++k) full = open[static_cast<std::size_t>(v + h) * nu + u + k];
              if (!full) break;
            }
            for (int dv = 0; dv < h; ++dv) {
              for (int k = 0; k < w; ++k) open[static_cast<std::size_t>(v + dv) * nu + u + k] = 0;
            }
            auto at = [&](int uu, int vv) {
              Vec3 p;
              p[a] = plane;
              p[ua] = std::clamp(grid.origin[ua] + grid.cell * uu, -half[ua], half[ua]);
              p[va] = std::clamp(grid.origin[va] + grid.cell * vv, -half[va], half[va]);
              return p;
            };
            VoxelFace f;
            f.normal = Vec3::Zero();
            f.normal[a] = sign;
            f.corners = {at(u, v), at(u + w, v), at(u + w, v + h), at(u, v + h)};
            if (sign < 0) std::swap(f.corners[1], f.corners[3]);
            out.push_back(f);
          }
        }
      }
    }
  }
  return out;
}

std::optional<double> column_top_below(const VoxelGrid& grid, const Vec3& extents, double x,
                                       double y, double z_from) {
  const Vec3 half = 0.5 * extents;
  if (std::abs(x) > half.x() || std::abs(y) > half.y()) return std::nullopt;
  const int i = std::clamp(static_cast<int>(std::floor((x - grid.origin.x()) / grid.cell)), 0,
                           grid.dims[0] - 1);
  const int j = std::clamp(static_cast<int>(std::floor((y - grid.origin.y()) / grid.cell)), 0,
                           grid.dims[1] - 1);
  for (int k = grid.dims[2] - 1; k >= 0; --k) {
    if (!grid.at(i, j, k)) continue;
    // Top of the cell, clipped to the asset box.
    const double top = std::min(grid.origin.z() + (k + 1) * grid.cell, half.z());
    if (top <= z_from) return top;
  }
  return std::nullopt;
}

}  // namespace layoutforge
