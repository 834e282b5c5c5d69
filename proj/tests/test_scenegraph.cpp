#include "helpers.hpp"
#include "layoutforge/scenegraph.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace lft;

namespace {

// Box spanning [z0, z1] vertically, centered at (x, y).
Obb column(double x, double y, double hx, double hy, double z0, double z1, double yaw = 0) {
  return box(Vec3(x, y, 0.5 * (z0 + z1)), Vec3(hx, hy, 0.5 * (z1 - z0)), yaw);
}

void check_tree_invariants(const SceneGraph& g, const std::map<MaskId, Obb>& obbs) {
  for (const auto& [id, e] : g.parent) {
    CHECK(g.depth(id) <= static_cast<int>(g.parent.size()));
    CHECK((e.parent == kFloorId || g.in_tree(e.parent)));
    CHECK(e.d_vertical >= 0);
    CHECK(e.d_vertical <= 1);
  }
  for (const auto& [id, box] : obbs) {
    const int memberships = g.in_tree(id) + static_cast<int>(g.ceiling_set.count(id)) +
                            static_cast<int>(g.excluded.count(id));
    CHECK(memberships == 1);
  }
}

}  // namespace

TEST_CASE("support verdict branches") {
  OracleRecord oracle;
  const Obb a = column(0, 0, 0.5, 0.5, 0, 1);
  SUBCASE("contact") {
    const auto v = supported_relationship(1, a, 2, column(0, 0, 0.1, 0.1, 1, 1.3), oracle, 0.05);
    CHECK(v.supported);
    CHECK(v.d_vertical == 0.0);
  }
  SUBCASE("containment") {
    const auto v = supported_relationship(1, a, 2, column(0, 0, 0.1, 0.1, 0.3, 0.5), oracle, 0.05);
    CHECK(v.supported);
    CHECK(v.d_vertical == doctest::Approx(0.4).epsilon(1e-12));
  }
  SUBCASE("oracle answer") {
    const Obb far = column(0, 0, 0.3, 0.3, 2, 2.5);
    oracle.occlusion_support[{1, 2}] = false;
    const auto v = supported_relationship(1, a, 2, far, oracle, 0.05);
    CHECK_FALSE(v.supported);
    CHECK(v.d_vertical == 0.0);
    oracle.occlusion_support[{1, 2}] = true;
    CHECK(supported_relationship(1, a, 2, far, oracle, 0.05).supported);
    try {
      supported_relationship(2, far, 1, a, oracle, 0.05);
      FAIL("expected MissingOracle");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingOracle);
    }
  }
}

TEST_CASE("containment ratio over random pairs") {
  std::mt19937_64 rng(131);
  OracleRecord oracle;
  for (int i = 0; i < 10000; ++i) {
    const double z0 = uniform(rng, 0, 1), h = uniform(rng, 0.2, 2);
    const Obb a = column(0, 0, 1, 1, z0, z0 + h, uniform(rng, 0, 6.3));
    const double b0 = z0 + uniform(rng, 0.06, 0.4) * h;
    const double b1 = b0 + uniform(rng, 0.01, 0.5) * (z0 + h - b0);
    const Obb b = column(uniform(rng, -0.2, 0.2), uniform(rng, -0.2, 0.2), 0.2, 0.2, b0, b1);
    const auto v = supported_relationship(1, a, 2, b, oracle, 0.05);
    REQUIRE(v.supported);
    CHECK(std::abs(v.d_vertical - (0.5 * (b0 + b1) - z0) / h) < 1e-12);
  }
}

TEST_CASE("stacked chain") {
  std::map<MaskId, Obb> obbs{{1, column(0, 0, 0.6, 0.4, 0, 0.75)}, {2, column(0.1, 0, 0.1, 0.1, 0.75, 1.2)}};
  OracleRecord oracle;
  oracle.floor_supported = {1};
  const SceneGraph g = build_support_tree(oracle, obbs, {}, {});
  CHECK(g.parent.at(1).parent == kFloorId);
  CHECK(g.parent.at(2).parent == 1);
  CHECK(g.parent.at(1).d_vertical == 0.0);
  CHECK(g.parent.at(2).d_vertical == 0.0);
  CHECK(g.depth(2) == 2);
  CHECK(g.top_down() == std::vector<MaskId>{1, 2});
  CHECK(g.subtree(1) == std::vector<MaskId>{1, 2});
  check_tree_invariants(g, obbs);
}

TEST_CASE("cabinet, table and a vase inside the cabinet") {
  std::map<MaskId, Obb> obbs{
      {1, column(0, 0, 0.5, 0.25, 0, 1.8)},         // cabinet
      {2, column(2, 0, 0.6, 0.4, 0, 0.75)},         // table
      {3, column(0, 0, 0.08, 0.08, 0.95, 1.25)},    // vase on a middle shelf
      {4, column(2.2, 0.1, 0.1, 0.1, 0.75, 1.1)},   // lamp on the table
      {5, column(5, 5, 0.2, 0.2, 1.0, 1.3)},        // floating, unresolved
      {6, column(-2, 0, 0.3, 0.3, 2.2, 2.5)},       // pendant
  };
  OracleRecord oracle;
  oracle.floor_supported = {1, 2};
  oracle.ceiling_supported = {6};
  const SceneGraph g = build_support_tree(oracle, obbs, {}, {});
  CHECK(g.parent.at(1).parent == kFloorId);
  CHECK(g.parent.at(2).parent == kFloorId);
  CHECK(g.parent.at(3).parent == 1);
  CHECK(g.parent.at(3).d_vertical == doctest::Approx(1.1 / 1.8).epsilon(1e-12));
  CHECK(g.parent.at(4).parent == 2);
  CHECK(g.excluded == std::set<MaskId>{5});
  CHECK(g.ceiling_set == std::set<MaskId>{6});
  check_tree_invariants(g, obbs);

  const auto j = nlohmann::json::parse(graph_to_json(g));
  CHECK(j.at("edges").size() == 4);
  CHECK(j.at("excluded") == nlohmann::json::array({5}));
  CHECK(j.at("root") == kFloorId);
}

TEST_CASE("oracle exclusions and missing answers") {
  std::map<MaskId, Obb> obbs{{1, column(0, 0, 0.5, 0.5, 0, 1)}, {2, column(0, 0, 0.2, 0.2, 1.02, 1.4)},
                             {3, column(0.82, 0, 0.3, 0.3, 0.5, 1.5)}};
  OracleRecord oracle;
  oracle.floor_supported = {1};
  oracle.excluded = {2};
  // 3 touches 1 from the side: only the oracle can answer.
  CHECK_THROWS_AS(build_support_tree(oracle, obbs, {}, {}), Error);
  oracle.occlusion_support[{1, 3}] = true;
  const SceneGraph g = build_support_tree(oracle, obbs, {}, {});
  CHECK(g.excluded.count(2));
  CHECK_FALSE(g.in_tree(2));
  CHECK(g.parent.at(3).parent == 1);
}

TEST_CASE("closest parent wins a shared child") {
  std::map<MaskId, Obb> obbs{{1, column(0, 0, 0.5, 0.5, 0, 1.0)}, {2, column(1.0, 0, 0.5, 0.5, 0, 1.02)},
                             {3, column(0.5, 0, 0.3, 0.3, 1.02, 1.3)}};
  OracleRecord oracle;
  oracle.floor_supported = {1, 2};
  const SceneGraph g = build_support_tree(oracle, obbs, {}, {});
  CHECK(g.parent.at(3).parent == 2);
  obbs[2] = column(1.0, 0, 0.5, 0.5, 0, 1.0);
  CHECK(build_support_tree(oracle, obbs, {}, {}).parent.at(3).parent == 1);
}

TEST_CASE("wall contacts are confirmed against fitted walls") {
  std::map<MaskId, Obb> obbs{{1, column(0.3, 1, 0.3, 0.5, 0, 1)}, {2, column(2, 1, 0.3, 0.3, 0, 1)}};
  OracleRecord oracle;
  oracle.floor_supported = {1, 2};
  oracle.wall_contacts = {{1, 7}, {2, 0}};
  const std::vector<Plane> walls{{Vec3(0, 1, 0), 0.0}, {Vec3(1, 0, 0), 0.0}};
  std::vector<std::string> warnings;
  const SceneGraph g = build_support_tree(oracle, obbs, walls, {}, &warnings);
  REQUIRE(g.wall_edges.size() == 1);
  CHECK(g.wall_edges[0] == std::pair<MaskId, int>{1, 1});
  CHECK(warnings.size() == 1);
}

TEST_CASE("refined boxes touch their supports") {
  RoomInfo room;
  room.ceiling_height = 2.6;
  SUBCASE("floating box reaches the floor") {
    std::map<MaskId, Obb> obbs{{1, column(0, 0, 0.4, 0.4, 0.03, 0.9)}};
    OracleRecord o;
    o.floor_supported = {1};
    const auto r = refine_obbs(build_support_tree(o, obbs, {}, {}), obbs, room);
    CHECK(std::abs(r.at(1).min_along(Vec3::UnitZ())) < 1e-9);
    CHECK(r.at(1).max_along(Vec3::UnitZ()) == doctest::Approx(0.9).epsilon(1e-12));
  }
  SUBCASE("tilted box becomes upright") {
    Obb tilted = column(0, 0, 0.4, 0.3, 0, 1.0);
    tilted.axes = rot_z(0.5) * rot_x(lft::rad(2));
    std::map<MaskId, Obb> obbs{{1, tilted}};
    OracleRecord o;
    o.floor_supported = {1};
    const auto r = refine_obbs(build_support_tree(o, obbs, {}, {}), obbs, room);
    const Obb& b = r.at(1);
    CHECK(b.axes.col(2).dot(Vec3::UnitZ()) > 1 - 1e-9);
    CHECK(std::abs(b.min_along(Vec3::UnitZ())) < 1e-9);
    for (const Vec3& c : tilted.corners()) {
      if (c.z() >= 0) CHECK(b.contains(c, 1e-9));
    }
  }
  SUBCASE("occluded cabinet recovers its height") {
    // Only the upper part of the cabinet is visible above an occluder.
    const Obb truth = column(1, 1, 0.4, 0.25, 0, 1.2, 0.3);
    std::mt19937_64 rng(137);
    PointCloud cloud;
    while (cloud.size() < 2000) {
      const Vec3 p = truth.center + truth.axes * Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1))
                                                     .cwiseProduct(truth.half_extents);
      if (p.z() > 0.55) cloud.points.push_back(p);
    }
    std::map<MaskId, Obb> obbs{{1, fit_obb(cloud, Vec3::UnitZ()).obb}};
    OracleRecord o;
    o.floor_supported = {1};
    const auto r = refine_obbs(build_support_tree(o, obbs, {}, {}), obbs, room);
    CHECK(std::abs(2 * r.at(1).half_extents.z() - 1.2) < 0.02);
  }
  SUBCASE("contact children start at the parent top; ceiling objects end at the ceiling") {
    std::map<MaskId, Obb> obbs{{1, column(0, 0, 0.5, 0.5, 0.02, 0.7)}, {2, column(0, 0, 0.1, 0.1, 0.73, 1.0)},
                               {3, column(2, 2, 0.2, 0.2, 2.0, 2.55)}};
    OracleRecord o;
    o.floor_supported = {1};
    o.ceiling_supported = {3};
    const SceneGraph g = build_support_tree(o, obbs, {}, {});
    REQUIRE(g.parent.at(2).parent == 1);
    const auto r = refine_obbs(g, obbs, room);
    CHECK(r.at(2).min_along(Vec3::UnitZ()) == doctest::Approx(r.at(1).max_along(Vec3::UnitZ())).epsilon(1e-12));
    CHECK(r.at(3).max_along(Vec3::UnitZ()) == doctest::Approx(2.6).epsilon(1e-12));
  }
}

TEST_CASE("geometric oracle answers match the construction") {
  RoomInfo room;
  room.ceiling_height = 2.5;
  room.walls = {{Vec3(1, 0, 0), 0.0}};
  const std::map<MaskId, Obb> boxes{{1, column(0.5, 0, 0.5, 0.5, 0, 1)}, {2, column(0.5, 0, 0.1, 0.1, 1, 1.5)},
                                    {3, column(3, 3, 0.2, 0.2, 2.0, 2.5)}};
  const OracleRecord o = GeometricOracle{}.answer(boxes, {{2, 1}}, room);
  CHECK(o.floor_supported == std::set<MaskId>{1});
  CHECK(o.ceiling_supported == std::set<MaskId>{3});
  CHECK(o.wall_contacts.at(1) == 0);
  CHECK(o.occlusion_support.at({1, 2}));
  CHECK_FALSE(o.occlusion_support.at({2, 1}));
  CHECK(o.object_dims.at(1) == Vec3(1, 1, 1));
}
