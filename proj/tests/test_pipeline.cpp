#include "helpers.hpp"
#include "layoutforge/pipeline.hpp"
#include "layoutforge/synth.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace lft;
namespace fs = std::filesystem;

namespace {

const SynthLibrary& library() {
  static const SynthLibrary lib = make_synth_library();
  return lib;
}

const SynthScene& small_scene() {
  static const SynthScene s = [] {
    SynthConfig cfg;
    cfg.objects = 8;
    cfg.seed = 5;
    return make_synth_scene(library(), cfg);
  }();
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string layout_text(const LayoutDocument& doc) {
  TempDir dir("pipe_layout");
  save_layout(doc, dir.path / "l.json");
  return slurp(dir.path / "l.json");
}

template <class F>
std::string error_text(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("full pipeline on a small synthetic scene") {
  const SynthScene& s = small_scene();
  const PipelineConfig cfg;
  const PipelineResult r = run_pipeline(s.bundle, library().library, cfg);
  REQUIRE(r.layout.objects.size() == s.truth.objects.size());
  const SceneCheck chk = scene_checks(r.layout, r.graph.graph, &library().library);
  CHECK(chk.intersection_pairs == 0);
  CHECK(chk.support_correct_pct == 100.0);
  CHECK(support_edge_accuracy(r.layout, s.truth) == 100.0);
  CHECK(r.refined.state.objective <= r.refined.initial_objective);
  for (const LayoutObject& o : r.layout.objects) CHECK(is_rotation(o.R));

  SUBCASE("rerun is identical") {
    const PipelineResult again = run_pipeline(s.bundle, library().library, cfg);
    CHECK(layout_text(again.layout) == layout_text(r.layout));
    CHECK(parse_to_json(again.parse) == parse_to_json(r.parse));
    CHECK(graph_to_json(again.graph.graph) == graph_to_json(r.graph.graph));
    CHECK(retrieval_to_json(again.retrieval) == retrieval_to_json(r.retrieval));
  }
  SUBCASE("stage artifacts round-trip") {
    const std::string p = parse_to_json(r.parse);
    CHECK(parse_to_json(parse_from_json(p)) == p);
    const std::string g = graph_to_json(r.graph.graph);
    CHECK(graph_to_json(graph_from_json(g)) == g);
    const std::string t = retrieval_to_json(r.retrieval);
    CHECK(retrieval_to_json(retrieval_from_json(t)) == t);
    const PipelineResult from_artifacts = [&] {
      PipelineResult x;
      x.parse = parse_from_json(p);
      x.graph = graph_stage(s.bundle, x.parse, cfg);
      return x;
    }();
    CHECK(graph_to_json(from_artifacts.graph.graph) == g);
  }
}

TEST_CASE("stage errors name the stage") {
  const SynthScene& s = small_scene();
  SUBCASE("parse") {
    SceneBundle b = s.bundle;
    std::fill(b.depth.values.begin(), b.depth.values.end(), 0.0f);
    const std::string msg = error_text([&] { run_pipeline(b, library().library, PipelineConfig{}); });
    CHECK(msg.find("stage 'parse'") != std::string::npos);
  }
  SUBCASE("retrieve") {
    SceneBundle b = s.bundle;
    const MaskId victim = b.masks.front().id;
    b.query_globals.erase(victim);
    const std::string msg = error_text([&] { run_pipeline(b, library().library, PipelineConfig{}); });
    CHECK(msg.find("stage 'retrieve'") != std::string::npos);
    CHECK(msg.find("object " + std::to_string(victim)) != std::string::npos);
  }
  SUBCASE("malformed artifacts") {
    CHECK_THROWS_AS(parse_from_json("{]"), Error);
    CHECK_THROWS_AS(retrieval_from_json("{\"x\": 1}"), Error);
  }
}

TEST_CASE("seeds") {
  PipelineConfig cfg;
  cfg.set_seed(99);
  CHECK(cfg.ransac.seed == 99);
  CHECK(cfg.pose.homography.seed == 99);
  CHECK(cfg.refine.anneal.seed == 99);

  PipelineConfig defaults;
  CHECK(defaults.ransac.seed == 42);
  CHECK(defaults.pose.homography.seed == 42);

  ::setenv("LAYOUTFORGE_SEED", "1234", 1);
  cfg.apply_env_seed();
  CHECK(cfg.ransac.seed == 1234);
  CHECK(cfg.refine.anneal.seed == 1234);
  ::setenv("LAYOUTFORGE_SEED", "12x", 1);
  CHECK_THROWS_AS(cfg.apply_env_seed(), Error);
  ::unsetenv("LAYOUTFORGE_SEED");
  cfg.set_seed(5);
  cfg.apply_env_seed();
  CHECK(cfg.ransac.seed == 5);
  CHECK(cfg.to_json() != defaults.to_json());
}

TEST_CASE("hashing") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
  CHECK(fnv1a("bar", fnv1a("foo")) == fnv1a("foobar"));

  TempDir a("hash_a"), b("hash_b");
  for (const auto& dir : {a.path, b.path}) {
    fs::create_directories(dir / "sub");
    std::ofstream(dir / "x.txt") << "one";
    std::ofstream(dir / "sub" / "y.txt") << "two";
  }
  CHECK(hash_directory(a.path) == hash_directory(b.path));
  std::ofstream(b.path / "sub" / "y.txt") << "three";
  CHECK(hash_directory(a.path) != hash_directory(b.path));
  std::ofstream(b.path / "sub" / "y.txt") << "two";
  CHECK(hash_directory(a.path) == hash_directory(b.path));
  fs::rename(b.path / "sub" / "y.txt", b.path / "sub" / "z.txt");
  CHECK(hash_directory(a.path) != hash_directory(b.path));
}

TEST_CASE("obj export has one box per object") {
  LayoutDocument doc;
  doc.objects.push_back(make_object(1, Vec3(1, 1, 1), Vec3(0, 0, 0.5)));
  doc.objects.push_back(make_object(2, Vec3(0.5, 0.5, 0.5), Vec3(2, 0, 0.25), 0.3));
  TempDir dir("obj");
  write_obj(doc, dir.path / "scene.obj");
  std::istringstream in(slurp(dir.path / "scene.obj"));
  int v = 0, f = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) ++f;
  }
  CHECK(v == 16);
  CHECK((f == 12 || f == 24));
}
