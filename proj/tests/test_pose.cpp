#include "helpers.hpp"
#include "layoutforge/pose.hpp"

#include <doctest.h>

#include <cmath>

using namespace lft;

namespace {

PatchFeatureMap random_map(std::mt19937_64& rng, int rows, int cols, int dim, double patch_px = 14.0) {
  std::normal_distribution<float> g;
  PatchFeatureMap m;
  m.rows = rows;
  m.cols = cols;
  m.dim = dim;
  m.patch_px = patch_px;
  m.data.resize(static_cast<std::size_t>(rows) * cols * dim);
  for (float& x : m.data) x = g(rng);
  m.finalize();
  return m;
}

void add_noise(PatchFeatureMap& m, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<float> g(0.0f, static_cast<float>(sigma));
  for (int i = 0; i < m.size(); ++i) {
    if (!m.is_valid(i)) continue;
    for (int k = 0; k < m.dim; ++k) m.data[static_cast<std::size_t>(i) * m.dim + k] += g(rng);
  }
  m.finalize();
}

void copy_patch(const PatchFeatureMap& from, int i, PatchFeatureMap& to, int j) {
  std::copy_n(from.data.begin() + static_cast<std::ptrdiff_t>(i) * from.dim, from.dim,
              to.data.begin() + static_cast<std::ptrdiff_t>(j) * to.dim);
}

// Template whose patch p carries the query descriptor found at warp(p).
template <class Warp>
PatchFeatureMap warped_template(const PatchFeatureMap& query, std::mt19937_64& rng, Warp warp) {
  PatchFeatureMap t = random_map(rng, query.rows, query.cols, query.dim, query.patch_px);
  for (int i = 0; i < t.size(); ++i) {
    const Vec2 q = warp(t.patch_center(i)) / query.patch_px;
    const int c = static_cast<int>(std::floor(q.x() + query.cols / 2.0));
    const int r = static_cast<int>(std::floor(q.y() + query.rows / 2.0));
    if (r >= 0 && r < query.rows && c >= 0 && c < query.cols) copy_patch(query, r * query.cols + c, t, i);
  }
  t.finalize();
  return t;
}

Vec2 rotate(const Vec2& p, double phi) {
  return {std::cos(phi) * p.x() - std::sin(phi) * p.y(), std::sin(phi) * p.x() + std::cos(phi) * p.y()};
}

}  // namespace

TEST_CASE("matching identical and shifted maps") {
  std::mt19937_64 rng(71);
  PatchFeatureMap a = random_map(rng, 6, 7, 128);
  std::fill_n(a.data.begin(), 2 * a.dim, 0.0f);
  a.finalize();
  const Correspondences same = match_patches(a, a);
  CHECK(same.pairs.size() == 40);
  for (const auto& p : same.pairs) {
    CHECK(p.cosine == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p.tmpl_px == p.query_px);
  }

  PatchFeatureMap shifted = random_map(rng, 6, 7, 128);
  for (int r = 0; r < 6; ++r) {
    for (int c = 1; c < 7; ++c) copy_patch(a, r * 7 + c - 1, shifted, r * 7 + c);
  }
  shifted.finalize();
  const Correspondences s = match_patches(a, shifted);
  CHECK(s.pairs.size() >= 30);
  for (const auto& p : s.pairs) CHECK((p.query_px - p.tmpl_px - Vec2(a.patch_px, 0)).norm() < 1e-12);
}

TEST_CASE("orthogonal descriptors do not match") {
  PatchFeatureMap a, b;
  a.rows = b.rows = 4;
  a.cols = b.cols = 4;
  a.dim = b.dim = 32;
  a.data.assign(16 * 32, 0.0f);
  b.data.assign(16 * 32, 0.0f);
  for (int i = 0; i < 16; ++i) {
    a.data[static_cast<std::size_t>(i) * 32 + i] = 1;
    b.data[static_cast<std::size_t>(i) * 32 + 16 + i] = 1;
  }
  a.finalize();
  b.finalize();
  CHECK(match_patches(a, b, 0.5).pairs.empty());
  CHECK(sim_img(match_patches(a, b, 0.5)) == 0.0);
}

TEST_CASE("sim_img is the plain sum of cosines") {
  std::mt19937_64 rng(73);
  Correspondences c;
  for (int i = 0; i < 10; ++i) c.pairs.push_back({Vec2::Zero(), Vec2::Zero(), 1.0, false});
  CHECK(sim_img(c) == 10.0);
  CHECK(sim_img(Correspondences{}) == 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    Correspondences r;
    long double sum = 0;
    const int n = static_cast<int>(rng() % 200);
    for (int i = 0; i < n; ++i) {
      const double v = uniform(rng, -1, 1);
      r.pairs.push_back({Vec2::Zero(), Vec2::Zero(), v, false});
      sum += v;
    }
    CHECK(std::abs(sim_img(r) - static_cast<double>(sum)) < 1e-12);
  }
}

TEST_CASE("coarse selection finds a planted view") {
  std::mt19937_64 rng(79);
  std::vector<PatchFeatureMap> views;
  for (int v = 0; v < 162; ++v) views.push_back(random_map(rng, 8, 8, 32));
  const auto top = coarse_select(views, views[37], 10);
  REQUIRE(top.size() == 10);
  CHECK(top[0].view == 37);
  for (std::size_t i = 1; i < top.size(); ++i) CHECK(top[i - 1].score >= top[i].score);

  int hits = 0;
  for (int trial = 0; trial < 50; ++trial) {
    PatchFeatureMap q = views[37];
    add_noise(q, rng, 0.05);
    const auto t = coarse_select(views, q, 10);
    hits += std::any_of(t.begin(), t.end(), [](const ViewScore& s) { return s.view == 37; });
  }
  CHECK(hits == 50);

  // Reordering templates does not change scores.
  std::vector<PatchFeatureMap> reversed(views.rbegin(), views.rend());
  const auto r = coarse_select(reversed, views[37], 1);
  CHECK(r[0].view == 161 - 37);
  CHECK(r[0].score == top[0].score);

  PatchFeatureMap empty = views[0];
  std::fill(empty.data.begin(), empty.data.end(), 0.0f);
  empty.finalize();
  const auto z = coarse_select(views, empty, 10);
  REQUIRE(z.size() == 10);
  for (int i = 0; i < 10; ++i) {
    CHECK(z[i].view == i);
    CHECK(z[i].score == 0.0);
  }
}

TEST_CASE("fine selection ranks by in-plane rotation") {
  std::mt19937_64 rng(83);
  const PatchFeatureMap query = random_map(rng, 41, 41, 64, 1.0);
  std::vector<PatchFeatureMap> views;
  views.push_back(warped_template(query, rng, [](const Vec2& p) { return rotate(p, lft::rad(20)); }));
  views.push_back(warped_template(query, rng, [](const Vec2& p) { return rotate(p, lft::rad(40)); }));
  views.push_back(warped_template(query, rng, [](const Vec2& p) { return p; }));
  // Mirror decoy of a symmetric object.
  views.push_back(warped_template(query, rng, [](const Vec2& p) { return Vec2(-p.x(), p.y()); }));
  const std::vector<ViewScore> cand{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  const auto fine = fine_select(cand, views, query, 4);
  REQUIRE(fine.size() == 4);
  CHECK(fine[0].view == 2);
  CHECK(fine[0].score < 1e-3);
  CHECK(fine[1].view == 0);
  CHECK(fine[1].score == doctest::Approx(4 * (1 - std::cos(lft::rad(20)))).epsilon(0.05));
  CHECK(fine[2].view == 1);
  CHECK(fine[3].view == 3);
  CHECK(fine_select(cand, views, query, 2).size() == 2);

  // Identical descriptors everywhere allow at most one mutual match.
  PatchFeatureMap flat = query;
  for (int i = 0; i < flat.size(); ++i) copy_patch(query, 0, flat, i);
  flat.finalize();
  std::vector<PatchFeatureMap> noise{flat};
  try {
    fine_select({{0, 0}}, noise, query, 4);
    FAIL("expected FineSelectionFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FineSelectionFailed);
  }
}

TEST_CASE("geometric enhancement") {
  const auto obb = obb_vertical_orientations(Obb{}, Vec3::UnitZ());
  SUBCASE("close to an OBB orientation") {
    const auto est = geometric_enhance({rot_z(lft::rad(85))}, obb);
    CHECK(est.source == RotationSource::Geometric);
    CHECK(lft::deg(est.theta) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(geodesic_angle(est.R_best, rot_z(lft::rad(90))) < 1e-9);
  }
  SUBCASE("beyond the threshold") {
    const std::vector<Mat3> vis{rot_z(lft::rad(45)), rot_z(lft::rad(40)), rot_z(lft::rad(50))};
    double theta = 1e9;
    for (const Mat3& a : obb) {
      for (const Mat3& v : vis) theta = std::min(theta, geodesic_angle(a, v));
    }
    CHECK(lft::deg(theta) == doctest::Approx(40.0));
    const auto est = geometric_enhance(vis, obb);
    CHECK(est.theta == doctest::Approx(theta).epsilon(1e-12));
    CHECK(est.source == RotationSource::Visual);
    CHECK(est.R_best == vis[0]);
  }
  SUBCASE("no OBB orientations") {
    const auto est = geometric_enhance({rot_z(0.3), rot_z(0.1)}, std::nullopt);
    CHECK(est.source == RotationSource::Visual);
    CHECK(est.R_best == rot_z(0.3));
    CHECK(est.obb_index == -1);
  }
  SUBCASE("source follows the threshold") {
    std::mt19937_64 rng(89);
    for (int i = 0; i < 2000; ++i) {
      std::vector<Mat3> vis;
      for (int k = 0; k < 4; ++k) vis.push_back(random_rotation(rng));
      const auto o = obb_vertical_orientations(Obb{Vec3::Zero(), rot_z(uniform(rng, 0, 6.3)), Vec3(1, 2, 3)},
                                               Vec3::UnitZ());
      const auto est = geometric_enhance(vis, o);
      CHECK((est.source == RotationSource::Geometric) == (est.theta <= std::numbers::pi / 5));
    }
  }
}

TEST_CASE("initial translation") {
  CHECK(init_translation(Obb{Vec3(1, 2, 3), Mat3::Identity(), Vec3::Ones()}) == Vec3(1, 2, 3));
}

TEST_CASE("scale closed forms") {
  const Obb target{Vec3(1, 1, 1), Mat3::Identity(), Vec3(1, 0.5, 0.25)};
  const Vec3 s = optimize_scale(Vec3::Ones(), ScaleMode::FullyFree, Mat3::Identity(), target);
  CHECK((s - Vec3(2, 1, 0.5)).norm() < 1e-9);

  // Aligned boxes: V(∩) is the product of the overlaps.
  const Vec3 lamp(0.4, 0.4, 1.5), tgt(0.5, 0.5, 1.8);
  auto aligned = [&](double h, double v) {
    double inter = 1, va = 1, vb = 1;
    const Vec3 sc(h, h, v);
    for (int a = 0; a < 3; ++a) {
      inter *= std::min(sc[a] * lamp[a], tgt[a]);
      va *= sc[a] * lamp[a];
      vb *= tgt[a];
    }
    return 2 * inter - va - vb;
  };
  double best = -1e300, bh = 0, bv = 0;
  for (int i = 0; i <= 4800; ++i) {
    for (int j = 0; j <= 4800; ++j) {
      const double h = 0.2 + 1e-3 * i, v = 0.2 + 1e-3 * j;
      const double f = aligned(h, v);
      if (f > best) {
        best = f;
        bh = h;
        bv = v;
      }
    }
  }
  const Vec3 sl = optimize_scale(lamp, ScaleMode::HeightFree, Mat3::Identity(),
                                 Obb{Vec3::Zero(), Mat3::Identity(), 0.5 * tgt});
  CHECK(sl.z() == doctest::Approx(1.2).epsilon(1e-9));
  CHECK(sl.x() == sl.y());
  CHECK(std::abs(sl.x() - bh) <= 1e-3);
  CHECK(std::abs(sl.z() - bv) <= 1e-3);
  CHECK(aligned(sl.x(), sl.z()) >= best - 1e-9);

  CHECK_THROWS_AS(optimize_scale(lamp, ScaleMode::FullyFree, Mat3::Identity(),
                                 Obb{Vec3::Zero(), Mat3::Identity(), Vec3(0, 1, 1)}),
                  Error);
}

TEST_CASE("scale beats a grid over each mode") {
  std::mt19937_64 rng(97);
  for (ScaleMode mode : {ScaleMode::HeightFree, ScaleMode::TwoLongAxes, ScaleMode::FullyFree}) {
    for (int trial = 0; trial < 4; ++trial) {
      const Vec3 ext(uniform(rng, 0.3, 2), uniform(rng, 0.3, 2), uniform(rng, 0.3, 2));
      const Mat3 R = rot_z(uniform(rng, 0, 3.2));
      const Obb target{Vec3::Zero(), Mat3::Identity(),
                       Vec3(uniform(rng, 0.2, 1.5), uniform(rng, 0.2, 1.5), uniform(rng, 0.2, 1.5))};
      const Vec3 s = optimize_scale(ext, mode, R, target);
      const double got = scale_objective(ext, R, s, target);
      const int n = scale_param_count(mode);
      const int g = n == 3 ? 22 : 100;
      double grid_best = -1e300;
      std::array<double, 3> p{};
      for (int k = 0; k < (n == 3 ? g * g * g : g * g); ++k) {
        const int idx[3] = {k % g, (k / g) % g, k / (g * g)};
        for (int a = 0; a < n; ++a) p[a] = kScaleMin + (kScaleMax - kScaleMin) * idx[a] / (g - 1);
        grid_best = std::max(grid_best, scale_objective(ext, R, scale_from_params(mode, ext, std::span(p.data(), n)), target));
      }
      CHECK(got >= grid_best - 1e-6 * std::abs(grid_best));
    }
  }
}
