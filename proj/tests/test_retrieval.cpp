#include "helpers.hpp"
#include "layoutforge/retrieval.hpp"

#include <doctest.h>

using namespace lft;

namespace {

std::vector<float> unit(std::vector<float> v) {
  double n = 0;
  for (float x : v) n += static_cast<double>(x) * x;
  for (float& x : v) x = static_cast<float>(x / std::sqrt(n));
  return v;
}

std::vector<float> gaussian(std::mt19937_64& rng, int dim, double sigma = 1.0) {
  std::normal_distribution<float> g(0.0f, static_cast<float>(sigma));
  std::vector<float> v(static_cast<std::size_t>(dim));
  for (float& x : v) x = g(rng);
  return v;
}

struct Fixture {
  AssetLibrary lib;
  SceneBundle bundle;

  Fixture() {
    Mask m;
    m.id = 1;
    m.category = "chair";
    bundle.masks.push_back(m);
    bundle.oracle = OracleRecord{};
  }

  void add_asset(const std::string& id, const std::string& cat, const Vec3& ext,
                 const std::vector<std::vector<float>>& views) {
    Asset a;
    a.id = id;
    a.category = cat;
    a.extents = ext;
    lib.manifest.assets.push_back(a);
    for (const auto& v : views) lib.thumbnails[id].push_back({v});
  }
};

}  // namespace

TEST_CASE("size penalty") {
  CHECK(size_penalty(Vec3(1, 2, 3), Vec3(1, 2, 3)) == 0.0);
  CHECK(size_penalty(Vec3(2, 1, 1), Vec3(1, 1, 1)) == 1.0);
  std::mt19937_64 rng(101);
  for (int i = 0; i < 1000; ++i) {
    const double la = uniform(rng, 0.1, 3), wa = uniform(rng, 0.1, 3), ha = uniform(rng, 0.1, 3);
    const double lm = uniform(rng, 0.1, 3), wm = uniform(rng, 0.1, 3), hm = uniform(rng, 0.1, 3);
    const double expect = std::fabs(la / ha - lm / hm) + std::fabs(wa / ha - wm / hm);
    CHECK(size_penalty(Vec3(la, wa, ha), Vec3(lm, wm, hm)) == doctest::Approx(expect).epsilon(1e-14));
  }
  CHECK_THROWS_AS(size_penalty(Vec3(1, 1, 0), Vec3(1, 1, 1)), Error);
  CHECK(footprint_dims(Vec3(1, 3, 2)) == Vec3(3, 1, 2));
}

TEST_CASE("self match ranks first") {
  std::mt19937_64 rng(103);
  Fixture f;
  const auto q = unit(gaussian(rng, 32));
  f.lib.manifest.categories.add("chair", "chair");
  f.add_asset("a", "chair", Vec3(1, 1, 1), std::vector<std::vector<float>>(20, q));
  f.add_asset("b", "chair", Vec3(1, 1, 1), {20, unit(gaussian(rng, 32))});
  f.bundle.query_globals[1] = {q};
  f.bundle.oracle->object_dims[1] = Vec3(1, 1, 1);
  const auto r = retrieve(1, f.bundle, f.lib);
  REQUIRE(r.size() == 2);
  CHECK(r[0].asset_id == "a");
  CHECK(r[0].sim_mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r[0].delta_s == 0.0);
}

TEST_CASE("size penalty weighting") {
  std::mt19937_64 rng(107);
  Fixture f;
  const auto v = unit(gaussian(rng, 16));
  f.lib.manifest.categories.add("chair", "chair");
  f.add_asset("wide", "chair", Vec3(2, 1, 1), {20, v});
  f.add_asset("cube", "chair", Vec3(1, 1, 1), {20, v});
  f.bundle.query_globals[1] = {v};
  f.bundle.oracle->object_dims[1] = Vec3(1, 1, 1);
  const auto r = retrieve(1, f.bundle, f.lib);
  REQUIRE(r.size() == 2);
  CHECK(r[0].asset_id == "cube");
  CHECK(r[1].delta_s == 1.0);
  CHECK(std::abs((r[0].score - r[1].score) - 0.1) < 1e-12);

  // Without oracle dims the fallback is used; without either the penalty is 0.
  f.bundle.oracle->object_dims.clear();
  const auto g = retrieve(1, f.bundle, f.lib, {}, Vec3(1, 2, 1));
  CHECK(g[0].asset_id == "wide");
  CHECK(g[0].delta_s == 0.0);
  const auto h = retrieve(1, f.bundle, f.lib);
  CHECK(h[0].delta_s == 0.0);
  CHECK(h[1].delta_s == 0.0);
  CHECK(h[0].asset_id == "cube");
}

TEST_CASE("candidates are confined to the inverse category") {
  std::mt19937_64 rng(109);
  Fixture f;
  f.lib.manifest.categories.add("armchair", "chair");
  f.lib.manifest.categories.add("stool", "chair");
  f.lib.manifest.categories.add("table", "table");
  const auto q = unit(gaussian(rng, 16));
  f.add_asset("t", "table", Vec3::Ones(), {20, q});
  f.add_asset("a", "armchair", Vec3::Ones(), {20, unit(gaussian(rng, 16))});
  f.add_asset("s", "stool", Vec3::Ones(), {20, unit(gaussian(rng, 16))});
  f.bundle.query_globals[1] = {q};
  const auto r = retrieve(1, f.bundle, f.lib);
  REQUIRE(r.size() == 2);
  for (const auto& s : r) CHECK(s.asset_id != "t");

  f.bundle.masks[0].category = "lamp";
  try {
    retrieve(1, f.bundle, f.lib);
    FAIL("expected EmptyCategory");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCategory);
  }
  f.bundle.masks[0].category = "chair";
  f.bundle.query_globals.clear();
  try {
    retrieve(1, f.bundle, f.lib);
    FAIL("expected MissingFeature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingFeature);
  }
}

TEST_CASE("view order and score monotonicity") {
  std::mt19937_64 rng(113);
  Fixture f;
  f.lib.manifest.categories.add("chair", "chair");
  std::vector<std::vector<float>> views;
  for (int i = 0; i < 20; ++i) views.push_back(unit(gaussian(rng, 24)));
  f.add_asset("x", "chair", Vec3(1, 0.5, 1), views);
  std::reverse(views.begin(), views.end());
  f.add_asset("y", "chair", Vec3(1, 0.5, 1), views);
  const auto q = unit(gaussian(rng, 24));
  f.bundle.query_globals[1] = {q};
  f.bundle.oracle->object_dims[1] = Vec3(1, 1, 1);
  const auto r = retrieve(1, f.bundle, f.lib);
  CHECK(r[0].sim_mean == r[1].sim_mean);
  CHECK(r[0].asset_id == "x");  // tie broken by id

  double mean = 0;
  for (const auto& v : views) {
    double c = 0;
    for (int k = 0; k < 24; ++k) c += static_cast<double>(v[k]) * q[k];
    mean += c / 20;
  }
  CHECK(r[0].sim_mean == doctest::Approx(mean).epsilon(1e-9));
  CHECK(r[0].score == doctest::Approx(mean - 0.1 * 0.5).epsilon(1e-12));

  RetrievalConfig cfg;
  for (double alpha : {0.0, 0.1, 0.5}) {
    cfg.alpha = alpha;
    const auto s = retrieve(1, f.bundle, f.lib, cfg);
    CHECK(std::abs(s[0].score - (s[0].sim_mean - alpha * s[0].delta_s)) < 1e-12);
  }
}

TEST_CASE("planted match among fifty assets") {
  std::mt19937_64 rng(127);
  Fixture f;
  f.lib.manifest.categories.add("chair", "chair");
  const int dim = 64;
  std::vector<std::vector<float>> base;
  for (int a = 0; a < 50; ++a) {
    base.push_back(unit(gaussian(rng, dim)));
    std::vector<std::vector<float>> views;
    for (int v = 0; v < 20; ++v) {
      auto n = gaussian(rng, dim, 0.05);
      for (int k = 0; k < dim; ++k) n[k] += base.back()[k];
      views.push_back(unit(n));
    }
    f.add_asset("asset_" + std::to_string(100 + a), "chair", Vec3(1, 1, 1), views);
  }
  f.bundle.oracle->object_dims[1] = Vec3(1, 1, 1);
  for (int a = 0; a < 50; ++a) {
    f.bundle.query_globals[1] = {base[a]};
    CHECK(retrieve(1, f.bundle, f.lib)[0].asset_id == "asset_" + std::to_string(100 + a));
  }
  int hits = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int a = static_cast<int>(rng() % 50);
    auto q = gaussian(rng, dim, 0.05);
    for (int k = 0; k < dim; ++k) q[k] += base[a][k];
    f.bundle.query_globals[1] = {unit(q)};
    hits += retrieve(1, f.bundle, f.lib)[0].asset_id == "asset_" + std::to_string(100 + a);
  }
  CHECK(hits >= 180);
}
