#include "helpers.hpp"
#include "layoutforge/metrics.hpp"
#include "layoutforge/refine.hpp"
#include "layoutforge/synth.hpp"

#include <doctest.h>

#include <fstream>
#include <limits>
#include <sstream>

using namespace lft;
namespace fs = std::filesystem;

namespace {

const SynthLibrary& library() {
  static const SynthLibrary lib = make_synth_library();
  return lib;
}

SynthScene scene(std::uint64_t seed, int objects = 12) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.objects = objects;
  return make_synth_scene(library(), cfg);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<fs::path> files_below(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("same seed gives a byte-identical bundle") {
  TempDir a("synth_a"), b("synth_b");
  const SynthScene s1 = scene(7), s2 = scene(7);
  save_bundle(s1.bundle, a.path / "bundle");
  save_bundle(s2.bundle, b.path / "bundle");
  save_layout(s1.truth, a.path / "truth.json");
  save_layout(s2.truth, b.path / "truth.json");
  const auto fa = files_below(a.path);
  REQUIRE(fa == files_below(b.path));
  CHECK(fa.size() > 3);
  for (const fs::path& p : fa) {
    INFO(p.string());
    CHECK(slurp(a.path / p) == slurp(b.path / p));
  }
  CHECK(s1.warnings == s2.warnings);

  TempDir c("synth_c");
  save_bundle(scene(8).bundle, c.path / "bundle");
  CHECK(slurp(a.path / "bundle" / "depth.pfm") != slurp(c.path / "bundle" / "depth.pfm"));
}

TEST_CASE("depth at mask pixels is the analytic ray entry into the labelled object") {
  for (std::uint64_t seed : {7u, 19u, 33u}) {
    const SynthScene s = scene(seed);
    const SceneBundle& b = s.bundle;
    const LayoutDocument& truth = s.truth;
    std::map<MaskId, std::vector<Obb>> parts;
    for (const LayoutObject& o : truth.objects) {
      for (const Obb& w : object_part_boxes(o, library().info.at(o.asset_id).parts)) {
        parts[o.source_mask].push_back({truth.to_camera(w.center), truth.camera_R * w.axes, w.half_extents});
      }
    }
    std::size_t checked = 0;
    double worst = 0;
    for (const Mask& m : b.masks) {
      for (int v = 0; v < b.camera.height; ++v) {
        for (int u = 0; u < b.camera.width; ++u) {
          if (!m.bitmap.at(u, v)) continue;
          const Vec3 d((u - b.camera.cx) / b.camera.fx, (v - b.camera.cy) / b.camera.fy, 1.0);
          double best = std::numeric_limits<double>::infinity();
          MaskId who = 0;
          for (const auto& [id, boxes] : parts) {
            for (const Obb& box : boxes) {
              const auto t = ray_box_entry(d, box);
              if (t && *t < best) {
                best = *t;
                who = id;
              }
            }
          }
          REQUIRE(who == m.id);
          const double z = b.depth.values[static_cast<std::size_t>(v) * b.camera.width + u];
          worst = std::max(worst, std::abs(z - best));
          ++checked;
        }
      }
    }
    INFO("seed " << seed);
    CHECK(checked > 1000);
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("ray box entry") {
  const Obb unit{Vec3(0, 0, 5), Mat3::Identity(), Vec3(1, 1, 1)};
  CHECK(ray_box_entry(Vec3(0, 0, 1), unit).value() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(ray_box_entry(Vec3(0, 0, 2), unit).value() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_FALSE(ray_box_entry(Vec3(1, 0, 0), unit).has_value());
  CHECK_FALSE(ray_box_entry(Vec3(0, 0, -1), unit).has_value());
  const Obb around{Vec3::Zero(), Mat3::Identity(), Vec3(1, 1, 1)};
  CHECK_FALSE(ray_box_entry(Vec3(0, 0, 1), around).has_value());
  const Obb turned{Vec3(0, 0, 5), rot_y(rad(45)), Vec3(1, 1, 1)};
  CHECK(ray_box_entry(Vec3(0, 0, 1), turned).value() == doctest::Approx(5.0 - std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("ground truth satisfies the layout constraints") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    INFO("seed " << seed);
    const SynthScene s = scene(seed, 8 + static_cast<int>(seed % 8));
    const LayoutDocument& truth = s.truth;
    for (const std::string& w : s.warnings) CHECK(w.find("overlap") == std::string::npos);
    CHECK(layout_overlap(truth, &library().library, 0.05) == 0);

    const SceneGraph g = graph_from_layout(truth);
    const SceneCheck chk = scene_checks(truth, g, &library().library);
    CHECK(chk.support_correct_pct == 100.0);
    CHECK(chk.intersection_pairs == 0);

    std::map<MaskId, const LayoutObject*> by_id;
    for (const LayoutObject& o : truth.objects) by_id[o.source_mask] = &o;
    for (const LayoutObject& o : truth.objects) {
      const Obb box = o.obb();
      const Vec3 up = Vec3::UnitZ();
      switch (o.support.kind) {
        case SupportKind::Floor:
          CHECK(std::abs(box.min_along(up)) <= 1e-9);
          break;
        case SupportKind::Ceiling:
          REQUIRE(truth.room.ceiling_height.has_value());
          CHECK(std::abs(box.max_along(up) - *truth.room.ceiling_height) <= 1e-9);
          break;
        case SupportKind::Contact: {
          REQUIRE(by_id.count(o.support.parent) == 1);
          const Obb parent = by_id.at(o.support.parent)->obb();
          CHECK(box.min_along(up) <= parent.max_along(up) + 1e-9);
          CHECK(box.min_along(up) >= parent.min_along(up));
          break;
        }
        case SupportKind::Internal:
          REQUIRE(by_id.count(o.support.parent) == 1);
          CHECK(obb_contains(by_id.at(o.support.parent)->obb(), box, 1e-6));
          break;
        case SupportKind::None:
          FAIL("object without support");
      }
      if (o.wall) {
        REQUIRE(*o.wall >= 0);
        REQUIRE(*o.wall < static_cast<int>(truth.room.walls.size()));
        CHECK(set_distance(box, truth.room.walls[*o.wall]) <= 1e-6);
      }
      for (const Plane& w : truth.room.walls) {
        for (const Vec3& c : box.corners()) CHECK(w.signed_distance(c) >= -1e-9);
      }
    }
  }
}

TEST_CASE("oracle record and graph follow the placement") {
  const SynthScene s = scene(7);
  const OracleRecord& oracle = s.bundle.oracle.value();
  REQUIRE(s.bundle.masks.size() == s.truth.objects.size());
  for (const LayoutObject& o : s.truth.objects) {
    INFO("object " << o.source_mask);
    CHECK((oracle.floor_supported.count(o.source_mask) == 1) == (o.support.kind == SupportKind::Floor));
    CHECK((oracle.ceiling_supported.count(o.source_mask) == 1) == (o.support.kind == SupportKind::Ceiling));
    if (o.wall) CHECK(oracle.wall_contacts.count(o.source_mask) == 1);
    CHECK(s.true_view.count(o.source_mask) == 1);
    CHECK(s.bundle.query_patches.count(o.source_mask) == 1);
  }
  const SceneGraph g = graph_from_layout(s.truth);
  for (const LayoutObject& o : s.truth.objects) {
    if (o.support.kind == SupportKind::Contact || o.support.kind == SupportKind::Internal) {
      REQUIRE(g.in_tree(o.source_mask));
      CHECK(g.parent.at(o.source_mask).parent == o.support.parent);
    }
  }
}

TEST_CASE("planted query features are the true view's template") {
  const SynthScene s = scene(11);
  for (const LayoutObject& o : s.truth.objects) {
    const int view = s.true_view.at(o.source_mask);
    const PatchFeatureMap& q = s.bundle.query_patches.at(o.source_mask);
    const PatchFeatureMap& t = library().library.templates.at(o.asset_id)[view];
    CHECK(q.data == t.data);
  }
}

TEST_CASE("object count is validated and shortfalls warn") {
  SynthConfig cfg;
  cfg.objects = 41;
  CHECK_THROWS_AS(make_synth_scene(library(), cfg), Error);
  cfg.objects = 0;
  CHECK_THROWS_AS(make_synth_scene(library(), cfg), Error);

  cfg.objects = 40;
  cfg.seed = 3;
  const SynthScene crowded = make_synth_scene(library(), cfg);
  if (crowded.truth.objects.size() < 40) CHECK_FALSE(crowded.warnings.empty());

  cfg.objects = 12;
  cfg.seed = 7;
  cfg.min_visible_px = 100000;
  try {
    const SynthScene none = make_synth_scene(library(), cfg);
    CHECK(none.truth.objects.size() < 12);
    CHECK_FALSE(none.warnings.empty());
  } catch (const Error& e) {
    CHECK(is_input_error(e.code()));
  }
}
