#include "layoutforge/pipeline.hpp"
#include "layoutforge/viewpoints.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace layoutforge {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json mat_json(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}
Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
Mat3 mat_from(const json& j) {
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

template <class F>
auto in_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage '") + stage + "': " + e.what());
  }
}

template <class F>
auto for_object(MaskId id, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), "object " + std::to_string(id) + ": " + e.what());
  }
}

Vec3 snap_axis_components(Vec3 n) {
  for (int k = 0; k < 3; ++k) {
    if (std::abs(n[k]) < 1e-9) n[k] = 0;
  }
  return n.normalized();
}

}  // namespace

void PipelineConfig::set_seed(std::uint64_t seed) {
  ransac.seed = seed;
  pose.homography.seed = seed;
  refine.anneal.seed = seed;
}

void PipelineConfig::apply_env_seed() {
  if (const char* s = std::getenv("LAYOUTFORGE_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0') {
      throw Error(ErrorCode::Validation, "LAYOUTFORGE_SEED must be an unsigned integer");
    }
    set_seed(v);
  }
}

std::string PipelineConfig::to_json() const {
  json j = {
      {"ransac",
       {{"iterations", ransac.iterations},
        {"inlier_threshold", ransac.inlier_threshold},
        {"min_inliers", ransac.min_inliers},
        {"seed", ransac.seed},
        {"max_walls", ransac.max_walls},
        {"floor_prior_deg", ransac.floor_prior_deg},
        {"manhattan_tolerance_deg", ransac.manhattan_tolerance_deg}}},
      {"graph", {{"eps", graph.eps}, {"wall_snap_tolerance", graph.wall_snap_tolerance}}},
      {"retrieval", {{"alpha", retrieval.alpha}}},
      {"pose",
       {{"coarse_k", pose.coarse_k},
        {"fine_k", pose.fine_k},
        {"min_cos", pose.min_cos},
        {"tau", pose.tau},
        {"homography",
         {{"iterations", pose.homography.iterations},
          {"threshold", pose.homography.inlier_threshold_px},
          {"seed", pose.homography.seed}}}}},
      {"refine",
       {{"lambda1", refine.lambda1},
        {"voxel_cell", refine.voxel_cell},
        {"wall_snap_tolerance", refine.wall_snap_tolerance},
        {"wall_yaw_snap_deg", refine.wall_yaw_snap_deg},
        {"anneal",
         {{"T0", refine.anneal.T0},
          {"cooling", refine.anneal.cooling},
          {"iters", refine.anneal.iters},
          {"step_sigma", refine.anneal.step_sigma},
          {"seed", refine.anneal.seed}}}}},
      {"min_object_points", min_object_points},
      {"run_refine", run_refine},
      {"run_settle", run_settle}};
  return j.dump(2);
}

SceneParse parse_scene(const SceneBundle& bundle, const PipelineConfig& cfg) {
  return in_stage("parse", [&] {
    bundle.validate();
    SceneParse out;
    const CameraIntrinsics& K = bundle.camera;
    Bitmap any(K.width, K.height), fg_mask(K.width, K.height);
    std::set<MaskId> ceiling;
    if (bundle.oracle) ceiling = bundle.oracle->ceiling_supported;
    for (const Mask& m : bundle.masks) {
      for (std::size_t i = 0; i < m.bitmap.bits.size(); ++i) {
        if (!m.bitmap.bits[i]) continue;
        any.bits[i] = 1;
        if (!ceiling.count(m.id)) fg_mask.bits[i] = 1;
      }
    }
    Bitmap bg_mask(K.width, K.height);
    for (std::size_t i = 0; i < any.bits.size(); ++i) bg_mask.bits[i] = any.bits[i] ? 0 : 1;
    const PointCloud background = depth_to_pointcloud(bundle.depth, K, &bg_mask);
    const PointCloud foreground = depth_to_pointcloud(bundle.depth, K, &fg_mask);
    const RoomFrame room = fit_room_planes(background, cfg.ransac, K.gravity, Vec3::Zero(), &foreground);

    const Vec3 up = room.floor.n;
    const Vec3 p0 = room.floor.d * up;
    Vec3 x_axis;
    if (!room.walls.empty()) {
      x_axis = room.walls.front().n;
    } else {
      x_axis = Vec3::UnitZ();
      out.warnings.push_back("parse: no wall found; world x follows the camera heading");
    }
    x_axis = (x_axis - x_axis.dot(up) * up).normalized();
    const Vec3 y_axis = up.cross(x_axis);
    Mat3 world_from_camera;
    world_from_camera.row(0) = x_axis.transpose();
    world_from_camera.row(1) = y_axis.transpose();
    world_from_camera.row(2) = up.transpose();
    out.camera_R = world_from_camera.transpose();
    out.camera_t = p0;
    auto to_world = [&](const Vec3& p) -> Vec3 { return world_from_camera * (p - p0); };

    out.room.floor_height = 0;
    for (std::size_t w = 0; w < room.walls.size(); ++w) {
      const Plane& pc = room.walls[w];
      Plane pw;
      pw.n = snap_axis_components(world_from_camera * pc.n);
      pw.d = pw.n.dot(to_world(pc.d * pc.n));
      out.room.walls.push_back(pw);
      out.room.wall_lengths.push_back(room.wall_lengths[w]);
    }
    if (room.ceiling) out.room.ceiling_height = to_world(room.ceiling->d * room.ceiling->n).z();

    for (const Mask& m : bundle.masks) {
      PointCloud cloud = depth_to_pointcloud(bundle.depth, K, &m.bitmap);
      if (cloud.points.size() < cfg.min_object_points) {
        out.warnings.push_back("parse: object " + std::to_string(m.id) + " has too few depth points");
        continue;
      }
      for (Vec3& p : cloud.points) p = to_world(p);
      const ObbFit fit = fit_obb(cloud, Vec3::UnitZ());
      if (fit.degenerate) {
        out.warnings.push_back("parse: object " + std::to_string(m.id) + " has a degenerate footprint");
      }
      out.obbs[m.id] = fit.obb;
    }
    return out;
  });
}

GraphStage graph_stage(const SceneBundle& bundle, const SceneParse& parse, const PipelineConfig& cfg) {
  return in_stage("graph", [&] {
    if (!bundle.oracle) throw Error(ErrorCode::MissingOracle, "bundle has no oracle.json");
    GraphStage g;
    g.graph = build_support_tree(*bundle.oracle, parse.obbs, parse.room.walls, cfg.graph, &g.warnings);
    g.refined = refine_obbs(g.graph, parse.obbs, parse.room);
    return g;
  });
}

std::vector<MaskId> placeable_masks(const SceneGraph& graph) {
  std::vector<MaskId> out;
  for (const auto& [id, e] : graph.parent) out.push_back(id);
  for (MaskId id : graph.ceiling_set) {
    if (!graph.in_tree(id)) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

RetrievalTable retrieve_stage(const SceneBundle& bundle, const AssetLibrary& library,
                              const SceneParse& parse, const GraphStage& graph,
                              const PipelineConfig& cfg, std::vector<std::string>* warnings) {
  (void)parse;
  return in_stage("retrieve", [&] {
    RetrievalTable table;
    for (MaskId id : placeable_masks(graph.graph)) {
      const Obb& box = graph.refined.at(id);
      try {
        table[id] = retrieve(id, bundle, library, cfg.retrieval, Vec3(2.0 * box.half_extents));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyCategory) {
          throw Error(e.code(), "object " + std::to_string(id) + ": " + e.what());
        }
        if (warnings) warnings->push_back(std::string("retrieve: ") + e.what() + "; object dropped");
      }
    }
    return table;
  });
}

LayoutDocument pose_stage(const SceneBundle& bundle, const AssetLibrary& library,
                          const SceneParse& parse, const GraphStage& graph,
                          const RetrievalTable& retrieval, const PipelineConfig& cfg) {
  return in_stage("pose", [&] {
    LayoutDocument doc;
    doc.camera_R = parse.camera_R;
    doc.camera_t = parse.camera_t;
    doc.room = parse.room;
    const Vec3 up_c = parse.camera_R * Vec3::UnitZ();
    for (const auto& [id, ranking] : retrieval) {
      if (ranking.empty()) continue;
      for_object(id, [&] {
        const Asset& asset = library.asset(ranking.front().asset_id);
        const Obb& box = graph.refined.at(id);
        auto q = bundle.query_patches.find(id);
        if (q == bundle.query_patches.end()) {
          throw Error(ErrorCode::MissingFeature, "no query patch features");
        }
        auto tmpl = library.templates.find(asset.id);
        if (tmpl == library.templates.end()) {
          throw Error(ErrorCode::MissingFeature, "asset '" + asset.id + "' has no template features");
        }
        const Vec3 center_c = doc.to_camera(box.center);
        const Mat3 world_from_virtual =
            parse.camera_R.transpose() * virtual_camera_rotation(center_c, up_c);
        const RotationEstimate est =
            estimate_rotation(asset, tmpl->second, q->second, world_from_virtual, box, cfg.pose);
        LayoutObject o;
        o.asset_id = asset.id;
        o.asset_category = asset.category;
        o.category = bundle.mask(id).category;
        o.extents = asset.extents;
        o.source_mask = id;
        o.R = orthonormalize(est.R_best);
        o.t = init_translation(box);
        o.s = optimize_scale(asset.extents, asset.scale_mode, o.R, box);
        doc.objects.push_back(std::move(o));
        return 0;
      });
    }
    return doc;
  });
}

RefineStage refine_stage(LayoutDocument posed, const SceneBundle& bundle, const AssetLibrary& library,
                         const GraphStage& graph, const PipelineConfig& cfg) {
  return in_stage("refine", [&] {
    RefineStage out;
    out.layout = local_refine(std::move(posed), graph.graph, cfg.refine);
    out.state = apply_hard_constraints(out.layout, graph.graph, &library, cfg.refine);
    const double raw = objective(out.state, out.layout, bundle, &library, cfg.refine);
    out.initial_objective = out.state.overlap > 0 ? std::numeric_limits<double>::infinity() : raw;
    out.state.objective = out.initial_objective;
    out.state = anneal_translations(std::move(out.state), out.layout, graph.graph, bundle, &library,
                                    cfg.refine);
    return out;
  });
}

PipelineResult run_pipeline(const SceneBundle& bundle, const AssetLibrary& library,
                            const PipelineConfig& cfg) {
  PipelineResult r;
  r.parse = parse_scene(bundle, cfg);
  r.warnings = r.parse.warnings;
  r.graph = graph_stage(bundle, r.parse, cfg);
  r.warnings.insert(r.warnings.end(), r.graph.warnings.begin(), r.graph.warnings.end());
  r.retrieval = retrieve_stage(bundle, library, r.parse, r.graph, cfg, &r.warnings);
  r.posed = pose_stage(bundle, library, r.parse, r.graph, r.retrieval, cfg);
  if (cfg.run_refine) {
    r.refined = refine_stage(r.posed, bundle, library, r.graph, cfg);
    r.layout = r.refined.layout;
  } else {
    r.layout = local_refine(r.posed, r.graph.graph, cfg.refine);
  }
  if (cfg.run_settle) {
    r.layout = in_stage("settle", [&] { return settle(r.layout, r.graph.graph, &library, cfg.refine); });
  }
  for (const std::string& w : r.warnings) {
    if (std::find(r.layout.warnings.begin(), r.layout.warnings.end(), w) == r.layout.warnings.end()) {
      r.layout.warnings.push_back(w);
    }
  }
  return r;
}

// ------------------------------------------------------------ serialization

std::string parse_to_json(const SceneParse& p) {
  json boxes = json::array();
  for (const auto& [id, b] : p.obbs) {
    boxes.push_back({{"mask", id},
                     {"center", vec_json(b.center)},
                     {"axes", mat_json(b.axes)},
                     {"half_extents", vec_json(b.half_extents)}});
  }
  json walls = json::array();
  for (std::size_t i = 0; i < p.room.walls.size(); ++i) {
    walls.push_back({{"n", vec_json(p.room.walls[i].n)},
                     {"d", p.room.walls[i].d},
                     {"length", i < p.room.wall_lengths.size() ? p.room.wall_lengths[i] : 0.0}});
  }
  json j = {{"camera_from_world", {{"R", mat_json(p.camera_R)}, {"t", vec_json(p.camera_t)}}},
            {"room",
             {{"floor_height", p.room.floor_height},
              {"ceiling_height", p.room.ceiling_height ? json(*p.room.ceiling_height) : json(nullptr)},
              {"walls", walls}}},
            {"obbs", boxes},
            {"warnings", p.warnings}};
  return j.dump(2) + "\n";
}

SceneParse parse_from_json(const std::string& text) {
  const json j = parse_json(text, "parse.json");
  SceneParse p;
  try {
    p.camera_R = mat_from(j.at("camera_from_world").at("R"));
    p.camera_t = vec_from(j.at("camera_from_world").at("t"));
    const json& room = j.at("room");
    p.room.floor_height = room.at("floor_height").get<double>();
    if (!room.at("ceiling_height").is_null()) p.room.ceiling_height = room.at("ceiling_height").get<double>();
    for (const json& w : room.at("walls")) {
      p.room.walls.push_back({vec_from(w.at("n")), w.at("d").get<double>()});
      p.room.wall_lengths.push_back(w.at("length").get<double>());
    }
    for (const json& b : j.at("obbs")) {
      p.obbs[b.at("mask").get<int>()] = {vec_from(b.at("center")), mat_from(b.at("axes")),
                                         vec_from(b.at("half_extents"))};
    }
    p.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("parse.json: ") + e.what());
  }
  return p;
}

SceneGraph graph_from_json(const std::string& text) {
  const json j = parse_json(text, "graph.json");
  SceneGraph g;
  try {
    for (const json& e : j.at("edges")) {
      g.parent[e.at("child").get<int>()] = {e.at("parent").get<int>(), e.at("d_vertical").get<double>()};
    }
    for (const json& c : j.at("ceiling")) g.ceiling_set.insert(c.get<int>());
    for (const json& w : j.at("wall_edges")) {
      g.wall_edges.emplace_back(w.at("mask").get<int>(), w.at("wall").get<int>());
    }
    for (const json& x : j.at("excluded")) g.excluded.insert(x.get<int>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("graph.json: ") + e.what());
  }
  return g;
}

std::string retrieval_to_json(const RetrievalTable& table) {
  json masks = json::array();
  for (const auto& [id, ranking] : table) {
    json r = json::array();
    for (const RetrievalScore& s : ranking) {
      r.push_back({{"asset_id", s.asset_id}, {"sim_mean", s.sim_mean}, {"delta_s", s.delta_s}, {"score", s.score}});
    }
    masks.push_back({{"mask", id}, {"ranking", r}});
  }
  return json{{"masks", masks}}.dump(2) + "\n";
}

RetrievalTable retrieval_from_json(const std::string& text) {
  const json j = parse_json(text, "retrieval.json");
  RetrievalTable t;
  try {
    for (const json& m : j.at("masks")) {
      auto& v = t[m.at("mask").get<int>()];
      for (const json& s : m.at("ranking")) {
        v.push_back({s.at("asset_id").get<std::string>(), s.at("sim_mean").get<double>(),
                     s.at("delta_s").get<double>(), s.at("score").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("retrieval.json: ") + e.what());
  }
  return t;
}

void write_obj(const LayoutDocument& layout, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f.precision(9);
  static const int faces[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                  {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  int base = 1;
  for (const LayoutObject& o : layout.objects) {
    f << "o mask_" << o.source_mask << "_" << o.asset_id << "\n";
    for (const Vec3& c : o.obb().corners()) f << "v " << c.x() << ' ' << c.y() << ' ' << c.z() << "\n";
    for (const auto& q : faces) {
      f << "f " << base + q[0] << ' ' << base + q[1] << ' ' << base + q[2] << ' ' << base + q[3] << "\n";
    }
    base += 8;
  }
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t h) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_directory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a("");
  for (const fs::path& p : files) {
    h = fnv1a(fs::relative(p, dir).generic_string(), h);
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    h = fnv1a(ss.str(), h);
  }
  return h;
}

}  // namespace layoutforge
