#include "layoutforge/synth.hpp"

#include "layoutforge/geometry.hpp"
#include "layoutforge/refine.hpp"
#include "layoutforge/scenegraph.hpp"
#include "layoutforge/viewpoints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace layoutforge {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kCell = 0.05;

double snap(double v) { return std::max(kCell * 2, std::round(v / kCell) * kCell); }

// Parts are authored from the box corner; shifted to the centered frame.
std::vector<PartBox> centered(std::vector<PartBox> parts, const Vec3& ext) {
  for (PartBox& p : parts) {
    p.lo -= 0.5 * ext;
    p.hi -= 0.5 * ext;
  }
  return parts;
}

std::vector<PartBox> solid(const Vec3& e) { return centered({{Vec3::Zero(), e}}, e); }

std::vector<PartBox> table_parts(const Vec3& e) {
  const double c = kCell, top = e.z() - c;
  return centered({{{0, 0, top}, e},
                   {{0, 0, 0}, {c, c, top}},
                   {{e.x() - c, 0, 0}, {e.x(), c, top}},
                   {{0, e.y() - c, 0}, {c, e.y(), top}},
                   {{e.x() - c, e.y() - c, 0}, {e.x(), e.y(), top}}},
                  e);
}

// Open-front (-y) shelf with `n` compartments; boards on the cell lattice.
std::vector<PartBox> shelf_parts(const Vec3& e, int n, std::vector<Subspace>* subspaces) {
  const double c = kCell;
  std::vector<PartBox> p = {{{0, e.y() - c, 0}, e},
                            {{0, 0, 0}, {c, e.y(), e.z()}},
                            {{e.x() - c, 0, 0}, {e.x(), e.y(), e.z()}}};
  std::vector<double> boards;  // board bottoms
  for (int k = 0; k <= n; ++k) {
    boards.push_back(k == n ? e.z() - c : std::round((e.z() - c) * k / n / c) * c);
  }
  for (double b : boards) p.push_back({{c, 0, b}, {e.x() - c, e.y() - c, b + c}});
  for (int k = 0; k < n; ++k) {
    subspaces->push_back({Vec3(c, 0, boards[k] + c) - 0.5 * e,
                          Vec3(e.x() - c, e.y() - c, boards[k + 1]) - 0.5 * e});
  }
  return centered(p, e);
}

void random_unit(std::mt19937_64& rng, int dim, std::vector<float>* out) {
  std::normal_distribution<double> g(0, 1);
  std::vector<double> v(dim);
  double n = 0;
  for (double& x : v) {
    x = g(rng);
    n += x * x;
  }
  n = std::sqrt(n);
  out->clear();
  for (double x : v) out->push_back(static_cast<float>(x / n));
}

struct Archetype {
  std::string lib_category, det_category;
  Vec3 extents;
  ScaleMode mode;
  SynthRole role;
  bool surface = false, wall_item = false, stackable = false;
  enum Shape { Solid, Table, Shelf } shape = Solid;
};

const std::vector<Archetype>& archetypes() {
  static const std::vector<Archetype> a = {
      {"dining_table", "table", {1.2, 0.8, 0.75}, ScaleMode::HeightFree, SynthRole::Floor, true, false, false, Archetype::Table},
      {"desk", "table", {1.0, 0.6, 0.75}, ScaleMode::TwoLongAxes, SynthRole::Floor, true, true, false, Archetype::Table},
      {"cabinet", "cabinet", {0.8, 0.45, 0.9}, ScaleMode::FullyFree, SynthRole::Floor, true, true, false, Archetype::Solid},
      {"nightstand", "cabinet", {0.5, 0.4, 0.55}, ScaleMode::HeightFree, SynthRole::Floor, true, false, false, Archetype::Solid},
      {"bed", "bed", {2.0, 1.5, 0.5}, ScaleMode::TwoLongAxes, SynthRole::Floor, false, true, false, Archetype::Solid},
      {"sofa", "sofa", {1.8, 0.85, 0.8}, ScaleMode::TwoLongAxes, SynthRole::Floor, false, true, false, Archetype::Solid},
      {"armchair", "chair", {0.8, 0.8, 0.9}, ScaleMode::HeightFree, SynthRole::Floor, false, false, false, Archetype::Solid},
      {"wardrobe", "wardrobe", {1.2, 0.6, 2.0}, ScaleMode::FullyFree, SynthRole::Floor, false, true, false, Archetype::Solid},
      {"bookshelf", "shelf", {0.9, 0.35, 1.8}, ScaleMode::FullyFree, SynthRole::Floor, false, true, false, Archetype::Shelf},
      {"table_lamp", "lamp", {0.25, 0.25, 0.45}, ScaleMode::HeightFree, SynthRole::Small},
      {"vase", "vase", {0.15, 0.15, 0.3}, ScaleMode::HeightFree, SynthRole::Small},
      {"storage_box", "box", {0.4, 0.3, 0.25}, ScaleMode::FullyFree, SynthRole::Small, true, false, true},
      {"book_stack", "book", {0.25, 0.2, 0.1}, ScaleMode::FullyFree, SynthRole::Small},
      {"pendant_light", "light", {0.4, 0.4, 0.4}, ScaleMode::HeightFree, SynthRole::Ceiling},
  };
  return a;
}

}  // namespace

VoxelGrid voxelize_parts(const std::vector<PartBox>& parts, const Vec3& extents, double cell) {
  VoxelGrid g = VoxelGrid::empty_box(extents, cell);
  for (int k = 0; k < g.dims[2]; ++k) {
    for (int j = 0; j < g.dims[1]; ++j) {
      for (int i = 0; i < g.dims[0]; ++i) {
        const Vec3 c = g.cell_center(i, j, k);
        for (const PartBox& p : parts) {
          if ((c.array() > p.lo.array()).all() && (c.array() < p.hi.array()).all()) {
            g.set(i, j, k);
            break;
          }
        }
      }
    }
  }
  return g;
}

SynthLibrary make_synth_library(std::uint64_t seed) {
  SynthLibrary out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.85, 1.15);
  const std::vector<Mat3> views = template_view_rotations();
  const std::vector<Mat3> thumbs = thumbnail_view_rotations();
  for (const Archetype& a : archetypes()) {
    out.library.manifest.categories.add(a.lib_category, a.det_category);
    for (int variant = 0; variant < 2; ++variant) {
      Vec3 e = a.extents;
      if (variant == 1) {
        for (int k = 0; k < 3; ++k) e[k] *= jitter(rng);
      }
      for (int k = 0; k < 3; ++k) e[k] = snap(e[k]);
      Asset asset;
      asset.id = a.lib_category + "_" + std::to_string(variant);
      asset.category = a.lib_category;
      asset.extents = e;
      asset.scale_mode = a.mode;
      SynthAssetInfo info;
      info.role = a.role;
      info.surface = a.surface;
      info.wall_item = a.wall_item;
      info.stackable = a.stackable;
      switch (a.shape) {
        case Archetype::Solid:
          info.parts = solid(e);
          break;
        case Archetype::Table:
          info.parts = table_parts(e);
          break;
        case Archetype::Shelf:
          info.parts = shelf_parts(e, 3, &asset.subspaces);
          break;
      }
      asset.voxel = voxelize_parts(info.parts, e, kCell);

      auto& tmpl = out.library.templates[asset.id];
      for (std::size_t v = 0; v < views.size(); ++v) {
        PatchFeatureMap m;
        m.rows = m.cols = kSynthPatchGrid;
        m.dim = kSynthPatchDim;
        std::vector<float> d;
        for (int p = 0; p < m.rows * m.cols; ++p) {
          random_unit(rng, m.dim, &d);
          m.data.insert(m.data.end(), d.begin(), d.end());
        }
        m.finalize();
        tmpl.push_back(std::move(m));
        asset.template_views.push_back(
            {views[v], "features/" + asset.id + "_tmpl_" + std::to_string(v) + ".bin"});
      }
      random_unit(rng, kSynthGlobalDim, &info.base.vec);
      auto& th = out.library.thumbnails[asset.id];
      std::normal_distribution<double> g(0, 0.3 / std::sqrt(double(kSynthGlobalDim)));
      for (std::size_t v = 0; v < thumbs.size(); ++v) {
        GlobalFeature f;
        double n = 0;
        for (float x : info.base.vec) {
          f.vec.push_back(static_cast<float>(x + g(rng)));
          n += double(f.vec.back()) * f.vec.back();
        }
        for (float& x : f.vec) x = static_cast<float>(x / std::sqrt(n));
        th.push_back(std::move(f));
        asset.thumbnail_views.push_back("features/" + asset.id + "_thumb_" + std::to_string(v) + ".bin");
      }
      out.info[asset.id] = std::move(info);
      out.library.manifest.assets.push_back(std::move(asset));
    }
  }
  out.library.manifest.validate();
  return out;
}

std::optional<double> ray_box_entry(const Vec3& dir, const Obb& box) {
  const Vec3 o = box.axes.transpose() * (-box.center);
  const Vec3 q = box.axes.transpose() * dir;
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double h = box.half_extents[a];
    if (std::abs(q[a]) < 1e-15) {
      if (std::abs(o[a]) > h) return std::nullopt;
      continue;
    }
    double t1 = (-h - o[a]) / q[a], t2 = (h - o[a]) / q[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
  }
  if (tmax < tmin || tmin <= 0) return std::nullopt;
  return tmin;
}

std::vector<Obb> object_part_boxes(const LayoutObject& obj, const std::vector<PartBox>& parts) {
  std::vector<Obb> out;
  for (const PartBox& p : parts) {
    const Vec3 c = obj.s.cwiseProduct(0.5 * (p.lo + p.hi));
    out.push_back({obj.R * c + obj.t, obj.R, 0.5 * obj.s.cwiseProduct(p.hi - p.lo)});
  }
  return out;
}

namespace {

struct Placed {
  LayoutObject obj;
  const SynthAssetInfo* info;
  MaskId parent = kFloorId;  // support parent (placement index + 1), floor = -1
  bool ceiling = false;
  std::vector<bool> subspace_used;
  int children = 0;
};

class SceneSampler {
 public:
  SceneSampler(const SynthLibrary& lib, const SynthConfig& cfg)
      : lib_(lib), cfg_(cfg), rng_(cfg.seed) {}

  SynthScene run();

 private:
  double uni(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  Vec3 to_cam(const Vec3& p) const { return R_cw_ * p + t_cw_; }
  bool in_view(const Obb& box) const;
  Vec3 random_scale(ScaleMode mode, const Vec3& extents);
  const Asset* random_asset(SynthRole role, bool want_surface = false, bool want_wall = false);
  bool clear_of_others(const Obb& box, std::size_t skip_parent, double clearance) const;
  bool try_floor();
  bool try_contact();
  bool try_internal();
  bool try_ceiling();
  LayoutObject make_object(const Asset& a) const;

  const SynthLibrary& lib_;
  SynthConfig cfg_;
  std::mt19937_64 rng_;
  double W_ = 0, D_ = 0, H_ = 0;
  Vec3 cam_;
  Mat3 R_cw_;
  Vec3 t_cw_;
  CameraIntrinsics K_;
  RoomInfo room_;
  std::vector<Placed> placed_;
};

bool SceneSampler::in_view(const Obb& box) const {
  for (const Vec3& c : box.corners()) {
    const Vec3 p = to_cam(c);
    if (p.z() < 0.3) return false;
    const Vec2 uv = K_.project(p);
    if (uv.x() < 2 || uv.y() < 2 || uv.x() > K_.width - 3 || uv.y() > K_.height - 3) return false;
  }
  return true;
}

Vec3 SceneSampler::random_scale(ScaleMode mode, const Vec3& extents) {
  const double a = uni(0.9, 1.1), b = uni(0.9, 1.1), c = uni(0.9, 1.1);
  switch (mode) {
    case ScaleMode::HeightFree:
      return {a, a, b};
    case ScaleMode::TwoLongAxes: {
      std::array<int, 3> idx{0, 1, 2};
      std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) { return extents[x] > extents[y]; });
      Vec3 s;
      s[idx[0]] = a;
      s[idx[1]] = b;
      s[idx[2]] = 0.5 * (a + b);
      return s;
    }
    case ScaleMode::FullyFree:
      break;
  }
  return {a, b, c};
}

const Asset* SceneSampler::random_asset(SynthRole role, bool want_surface, bool want_wall) {
  std::vector<const Asset*> c;
  for (const Asset& a : lib_.library.manifest.assets) {
    const SynthAssetInfo& i = lib_.info.at(a.id);
    if (i.role != role) continue;
    if (want_surface && !i.surface) continue;
    if (want_wall && !i.wall_item) continue;
    c.push_back(&a);
  }
  if (c.empty()) return nullptr;
  return c[pick(static_cast<int>(c.size()))];
}

LayoutObject SceneSampler::make_object(const Asset& a) const {
  LayoutObject o;
  o.asset_id = a.id;
  o.asset_category = a.category;
  o.category = *lib_.library.manifest.categories.detector_of(a.category);
  o.extents = a.extents;
  return o;
}

bool SceneSampler::clear_of_others(const Obb& box, std::size_t skip, double clearance) const {
  for (std::size_t k = 0; k < placed_.size(); ++k) {
    if (k == skip) continue;
    if (set_distance(box, placed_[k].obj.obb()) < clearance) return false;
  }
  return true;
}

bool SceneSampler::try_floor() {
  const bool at_wall = uni(0, 1) < 0.45;
  const Asset* a = random_asset(SynthRole::Floor, false, at_wall);
  if (!a) return false;
  LayoutObject o = make_object(*a);
  o.s = random_scale(a->scale_mode, a->extents);
  const Vec3 half = 0.5 * o.s.cwiseProduct(o.extents);
  const double clearance = uni(0.1, 0.2);
  if (at_wall) {
    // Back (+y) against one of the two walls facing the camera.
    const bool wall_x = uni(0, 1) < 0.5;
    const double yaw = wall_x ? -kPi / 2 : 0.0;
    o.R = rot_z(yaw);
    if (wall_x) {
      o.t = {W_ - half.y(), uni(half.x() + clearance, D_ - half.x() - clearance), half.z()};
      o.wall = 2;
    } else {
      o.t = {uni(half.x() + clearance, W_ - half.x() - clearance), D_ - half.y(), half.z()};
      o.wall = 3;
    }
  } else {
    o.R = rot_z(uni(0, 2 * kPi));
    o.t = {uni(0.5, W_ - 0.5), uni(0.5, D_ - 0.5), half.z()};
    o.wall.reset();
  }
  const Obb box = o.obb();
  if (!in_view(box)) return false;
  for (std::size_t w = 0; w < room_.walls.size(); ++w) {
    const double gap = signed_plane_gap(box, room_.walls[w]);
    if (o.wall && static_cast<int>(w) == *o.wall) continue;
    if (gap < clearance) return false;
  }
  const Vec2 c2(cam_.x(), cam_.y());
  const Vec2 b2(box.center.x(), box.center.y());
  if ((b2 - c2).norm() < 1.0 + half.head<2>().norm()) return false;
  if (!clear_of_others(box, placed_.size(), clearance)) return false;
  o.support = {SupportKind::Floor, kFloorId, 0.0};
  Placed p{o, &lib_.info.at(a->id), kFloorId, false, std::vector<bool>(a->subspaces.size(), false), 0};
  placed_.push_back(std::move(p));
  return true;
}

bool SceneSampler::try_contact() {
  std::vector<std::size_t> parents;
  for (std::size_t k = 0; k < placed_.size(); ++k) {
    const Placed& p = placed_[k];
    if (!p.info->surface || p.ceiling || p.obj.support.kind == SupportKind::Internal) continue;
    if (p.children >= 2) continue;
    // Stacks go at most three high.
    if (p.obj.support.kind == SupportKind::Contact && p.parent >= 0 &&
        placed_[p.parent].obj.support.kind == SupportKind::Contact) {
      continue;
    }
    parents.push_back(k);
  }
  if (parents.empty()) return false;
  const std::size_t pk = parents[pick(static_cast<int>(parents.size()))];
  const LayoutObject& parent = placed_[pk].obj;
  const Asset* a = random_asset(SynthRole::Small);
  if (!a) return false;
  LayoutObject o = make_object(*a);
  o.s = random_scale(a->scale_mode, a->extents);
  const Obb pb = parent.obb();
  const double yaw = yaw_of(parent.R) + uni(-0.6, 0.6);
  o.R = rot_z(yaw);
  const Vec3 half = 0.5 * o.s.cwiseProduct(o.extents);
  const Mat3 rel = parent.R.transpose() * o.R;
  const Vec3 foot = rel.cwiseAbs() * half;
  const double mx = pb.half_extents.x() - foot.x() - 0.05;
  const double my = pb.half_extents.y() - foot.y() - 0.05;
  if (mx <= 0 || my <= 0) return false;
  const Vec3 local(uni(-mx, mx), uni(-my, my), 0);
  o.t = parent.R * local + parent.t;
  o.t.z() = pb.max_along(Vec3::UnitZ()) + half.z();
  const Obb box = o.obb();
  if (box.max_along(Vec3::UnitZ()) > H_ - 0.6) return false;
  if (!in_view(box)) return false;
  if (!clear_of_others(box, pk, 0.08)) return false;
  o.support = {SupportKind::Contact, static_cast<MaskId>(pk), 0.0};
  Placed p{o, &lib_.info.at(a->id), static_cast<MaskId>(pk), false, {}, 0};
  placed_.push_back(std::move(p));
  ++placed_[pk].children;
  return true;
}

bool SceneSampler::try_internal() {
  std::vector<std::pair<std::size_t, int>> slots;
  for (std::size_t k = 0; k < placed_.size(); ++k) {
    for (std::size_t s = 0; s < placed_[k].subspace_used.size(); ++s) {
      if (!placed_[k].subspace_used[s]) slots.emplace_back(k, static_cast<int>(s));
    }
  }
  if (slots.empty()) return false;
  const auto [pk, si] = slots[pick(static_cast<int>(slots.size()))];
  const Placed& P = placed_[pk];
  const Asset& pa = lib_.library.asset(P.obj.asset_id);
  const Asset* a = random_asset(SynthRole::Small);
  if (!a) return false;
  LayoutObject o = make_object(*a);
  o.s = random_scale(a->scale_mode, a->extents);
  o.R = rot_z(yaw_of(P.obj.R) + (pick(2) ? kPi / 2 : 0.0));
  const Subspace& sub = pa.subspaces[si];
  const double zc = 0.5 * (sub.lo.z() + sub.hi.z()) + 0.5 * pa.extents.z();
  const double d = zc / pa.extents.z();
  if (nearest_subspace(pa, d) != si) return false;
  const auto [t, s] = place_internal(o, P.obj, pa, d);
  if ((s - o.s).norm() > 1e-12) return false;  // only children that fit as they are
  o.t = t;
  const Obb box = o.obb();
  o.support = {SupportKind::Internal, static_cast<MaskId>(pk), 0.0};
  const Obb pb = P.obj.obb();
  o.support.d_vertical = (0.5 * (box.max_along(Vec3::UnitZ()) + box.min_along(Vec3::UnitZ())) -
                          pb.min_along(Vec3::UnitZ())) /
                         (2.0 * pb.half_extents.z());
  if (!in_view(box)) return false;
  Placed p{o, &lib_.info.at(a->id), static_cast<MaskId>(pk), false, {}, 0};
  placed_.push_back(std::move(p));
  placed_[pk].subspace_used[si] = true;
  return true;
}

bool SceneSampler::try_ceiling() {
  for (const Placed& p : placed_) {
    if (p.ceiling) return false;
  }
  const Asset* a = random_asset(SynthRole::Ceiling);
  if (!a) return false;
  LayoutObject o = make_object(*a);
  o.s = random_scale(a->scale_mode, a->extents);
  o.R = rot_z(uni(0, kPi / 2));
  const Vec3 half = 0.5 * o.s.cwiseProduct(o.extents);
  o.t = {uni(1.0, W_ - 0.5), uni(1.0, D_ - 0.5), H_ - half.z()};
  const Obb box = o.obb();
  if (!in_view(box)) return false;
  if (!clear_of_others(box, placed_.size(), 0.3)) return false;
  o.support = {SupportKind::Ceiling, kFloorId, 0.0};
  Placed p{o, &lib_.info.at(a->id), kFloorId, true, {}, 0};
  placed_.push_back(std::move(p));
  return true;
}

SynthScene SceneSampler::run() {
  SynthScene out;
  if (cfg_.objects < 1 || cfg_.objects > 40) {
    throw Error(ErrorCode::Validation, "synth: object count must lie in [1, 40]");
  }
  W_ = uni(4.0, 6.0);
  D_ = std::clamp(W_ * uni(0.8, 1.2), 4.0, 6.0);
  H_ = uni(2.6, 3.0);
  room_.floor_height = 0;
  room_.ceiling_height = H_;
  room_.walls = {{Vec3::UnitX(), 0}, {Vec3::UnitY(), 0}, {-Vec3::UnitX(), -W_}, {-Vec3::UnitY(), -D_}};
  room_.wall_lengths = {D_, W_, D_, W_};

  cam_ = {uni(0.3, 0.6), uni(0.3, 0.6), uni(1.4, 1.7)};
  const Vec3 target(0.55 * W_ + uni(-0.3, 0.3), 0.55 * D_ + uni(-0.3, 0.3), uni(0.5, 0.9));
  const Vec3 f = (target - cam_).normalized();
  const Vec3 x = f.cross(Vec3::UnitZ()).normalized();
  const Vec3 y = f.cross(x);
  R_cw_.row(0) = x.transpose();
  R_cw_.row(1) = y.transpose();
  R_cw_.row(2) = f.transpose();
  t_cw_ = -R_cw_ * cam_;
  K_.width = cfg_.width;
  K_.height = cfg_.height;
  K_.fx = K_.fy = uni(180.0, 200.0) * cfg_.width / 320.0;
  K_.cx = 0.5 * cfg_.width;
  K_.cy = 0.5 * cfg_.height;
  K_.gravity = Vec3(R_cw_ * -Vec3::UnitZ());

  // Floor furniture first, then things on and inside it.
  const int n = cfg_.objects;
  const int n_floor = std::max(1, static_cast<int>(std::lround(n * 0.55)));
  int attempts = 0;
  while (static_cast<int>(placed_.size()) < n_floor && attempts < 1000) {
    ++attempts;
    try_floor();
  }
  while (static_cast<int>(placed_.size()) < n && attempts < 1000) {
    ++attempts;
    const double r = uni(0, 1);
    bool ok = false;
    if (r < 0.1) {
      ok = try_ceiling();
    } else if (r < 0.35) {
      ok = try_internal();
    } else if (r < 0.9) {
      ok = try_contact();
    } else {
      ok = try_floor();
    }
    (void)ok;
  }
  if (static_cast<int>(placed_.size()) < n) {
    out.warnings.push_back("synth: placed " + std::to_string(placed_.size()) + " of " +
                           std::to_string(n) + " objects after 1000 attempts");
  }

  // Ray cast, then drop barely visible objects (with everything they carry)
  // until the set is stable.
  std::vector<bool> alive(placed_.size(), true);
  std::vector<int> label;
  std::vector<double> depth;
  const int npx = K_.width * K_.height;
  for (;;) {
    std::vector<std::vector<Obb>> parts(placed_.size());
    for (std::size_t k = 0; k < placed_.size(); ++k) {
      if (alive[k]) {
        parts[k] = object_part_boxes(placed_[k].obj, placed_[k].info->parts);
        for (Obb& b : parts[k]) b = {to_cam(b.center), R_cw_ * b.axes, b.half_extents};
      }
    }
    std::vector<Plane> planes;
    for (const Plane& w : room_.walls) planes.push_back(w);
    planes.push_back({Vec3::UnitZ(), 0});
    planes.push_back({-Vec3::UnitZ(), -H_});
    for (Plane& p : planes) {
      const Vec3 nc = R_cw_ * p.n;
      p = {nc, p.d + nc.dot(t_cw_)};
    }
    label.assign(npx, -1);
    depth.assign(npx, 0.0);
    std::vector<int> count(placed_.size(), 0);
    for (int v = 0; v < K_.height; ++v) {
      for (int u = 0; u < K_.width; ++u) {
        const Vec3 d = K_.ray(u, v);
        double best = std::numeric_limits<double>::infinity();
        for (const Plane& p : planes) {
          const double nd = p.n.dot(d);
          if (nd >= 0) continue;
          // Inside the room n.x - d > 0 at the origin; exit where it hits zero.
          const double t = p.d / nd;
          if (t > 0 && t < best) best = t;
        }
        int who = -1;
        for (std::size_t k = 0; k < parts.size(); ++k) {
          for (const Obb& b : parts[k]) {
            const auto t = ray_box_entry(d, b);
            if (t && *t < best) {
              best = *t;
              who = static_cast<int>(k);
            }
          }
        }
        const int i = v * K_.width + u;
        label[i] = who;
        depth[i] = best;
        if (who >= 0) ++count[who];
      }
    }
    bool changed = false;
    for (std::size_t k = 0; k < placed_.size(); ++k) {
      if (alive[k] && count[k] < cfg_.min_visible_px) {
        alive[k] = false;
        changed = true;
      }
    }
    // Children of dropped objects go too.
    for (bool again = true; again;) {
      again = false;
      for (std::size_t k = 0; k < placed_.size(); ++k) {
        if (alive[k] && placed_[k].parent >= 0 && !alive[placed_[k].parent]) {
          alive[k] = false;
          again = changed = true;
        }
      }
    }
    if (!changed) break;
  }

  const auto dropped = std::count(alive.begin(), alive.end(), false);
  if (dropped > 0) {
    out.warnings.push_back("synth: dropped " + std::to_string(dropped) + " of " + std::to_string(placed_.size()) +
                           " objects with fewer than " + std::to_string(cfg_.min_visible_px) + " visible pixels");
  }

  // Final ids: 1..N in placement order.
  std::vector<MaskId> id_of(placed_.size(), -1);
  MaskId next = 1;
  for (std::size_t k = 0; k < placed_.size(); ++k) {
    if (alive[k]) id_of[k] = next++;
  }

  SceneBundle& b = out.bundle;
  b.camera = K_;
  b.depth.width = K_.width;
  b.depth.height = K_.height;
  b.depth.values.assign(npx, 0.0f);
  std::mt19937_64 noise_rng(cfg_.seed * 7919 + 17);
  std::normal_distribution<double> noise(0.0, cfg_.depth_noise > 0 ? cfg_.depth_noise : 1.0);
  for (int i = 0; i < npx; ++i) {
    double z = depth[i];
    if (cfg_.depth_noise > 0) z += noise(noise_rng);
    b.depth.values[i] = std::isfinite(z) && z > 0 ? static_cast<float>(z) : 0.0f;
  }

  LayoutDocument& truth = out.truth;
  truth.camera_R = R_cw_;
  truth.camera_t = t_cw_;
  truth.room = room_;
  std::map<MaskId, Obb> boxes;
  std::map<MaskId, MaskId> parents;
  const std::vector<Mat3> views = template_view_rotations();
  std::normal_distribution<double> dnoise(0.0, cfg_.descriptor_noise > 0 ? cfg_.descriptor_noise : 1.0);
  for (std::size_t k = 0; k < placed_.size(); ++k) {
    if (!alive[k]) continue;
    const MaskId id = id_of[k];
    LayoutObject o = placed_[k].obj;
    o.source_mask = id;
    if (placed_[k].parent >= 0) {
      o.support.parent = id_of[placed_[k].parent];
      parents[id] = o.support.parent;
    }
    truth.objects.push_back(o);
    boxes[id] = o.obb();

    Mask m;
    m.id = id;
    m.category = o.category;
    m.bitmap = Bitmap(K_.width, K_.height);
    for (int i = 0; i < npx; ++i) {
      if (label[i] == static_cast<int>(k)) m.bitmap.bits[i] = 1;
    }
    m.bbox = tight_bbox(m.bitmap);
    b.masks.push_back(std::move(m));

    // Planted descriptors: the template of the view nearest the true one.
    const Vec3 center_c = to_cam(o.t);
    const Mat3 cam_from_virtual = virtual_camera_rotation(center_c, R_cw_ * Vec3::UnitZ());
    const Mat3 virtual_from_object = cam_from_virtual.transpose() * R_cw_ * o.R;
    int best_view = 0;
    double best_angle = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < views.size(); ++v) {
      const double ang = geodesic_angle(views[v], virtual_from_object);
      if (ang < best_angle) {
        best_angle = ang;
        best_view = static_cast<int>(v);
      }
    }
    out.true_view[id] = best_view;
    PatchFeatureMap q = lib_.library.templates.at(o.asset_id)[best_view];
    if (cfg_.descriptor_noise > 0) {
      for (float& x : q.data) x = static_cast<float>(x + dnoise(noise_rng));
      q.finalize();
    }
    b.query_patches[id] = std::move(q);
    b.query_globals[id] = lib_.info.at(o.asset_id).base;
  }
  b.oracle = GeometricOracle{}.answer(boxes, parents, room_);

  // The generator's own constraints must hold on the ground truth.
  if (layout_overlap(truth, &lib_.library, kCell) != 0) {
    out.warnings.push_back("synth: ground truth has voxel overlap");
  }
  b.validate();
  return out;
}

}  // namespace

SynthScene make_synth_scene(const SynthLibrary& lib, const SynthConfig& cfg) {
  return SceneSampler(lib, cfg).run();
}

}  // namespace layoutforge
