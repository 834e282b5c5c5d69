#pragma once

#include "layoutforge/geometry.hpp"
#include "layoutforge/ingest.hpp"
#include "layoutforge/metrics.hpp"
#include "layoutforge/pose.hpp"
#include "layoutforge/refine.hpp"
#include "layoutforge/retrieval.hpp"
#include "layoutforge/scenegraph.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace layoutforge {

struct PipelineConfig {
  RansacConfig ransac;
  GraphConfig graph;
  RetrievalConfig retrieval;
  PoseConfig pose;
  RefineConfig refine;
  std::size_t min_object_points = 20;
  bool run_refine = true;
  bool run_settle = true;

  // Sets every random seed at once.
  void set_seed(std::uint64_t seed);
  // LAYOUTFORGE_SEED, when set, wins over everything else.
  void apply_env_seed();
  std::string to_json() const;
};

// Room and per-mask boxes in the gravity-aligned world frame.
struct SceneParse {
  Mat3 camera_R = Mat3::Identity();  // camera_from_world
  Vec3 camera_t = Vec3::Zero();
  RoomInfo room;
  std::map<MaskId, Obb> obbs;
  std::vector<std::string> warnings;
};

using RetrievalTable = std::map<MaskId, std::vector<RetrievalScore>>;

SceneParse parse_scene(const SceneBundle& bundle, const PipelineConfig& config);

struct GraphStage {
  SceneGraph graph;
  std::map<MaskId, Obb> refined;
  std::vector<std::string> warnings;
};
GraphStage graph_stage(const SceneBundle& bundle, const SceneParse& parse, const PipelineConfig& config);

// Objects that get an asset: tree nodes and ceiling objects.
std::vector<MaskId> placeable_masks(const SceneGraph& graph);

RetrievalTable retrieve_stage(const SceneBundle& bundle, const AssetLibrary& library,
                              const SceneParse& parse, const GraphStage& graph,
                              const PipelineConfig& config, std::vector<std::string>* warnings);

// Rotation, translation and scale for every retrieved object.
LayoutDocument pose_stage(const SceneBundle& bundle, const AssetLibrary& library,
                          const SceneParse& parse, const GraphStage& graph,
                          const RetrievalTable& retrieval, const PipelineConfig& config);

struct RefineStage {
  LayoutDocument layout;
  OptState state;
  double initial_objective = 0;  // after hard constraints, +inf with overlaps
};
RefineStage refine_stage(LayoutDocument posed, const SceneBundle& bundle, const AssetLibrary& library,
                         const GraphStage& graph, const PipelineConfig& config);

struct PipelineResult {
  SceneParse parse;
  GraphStage graph;
  RetrievalTable retrieval;
  LayoutDocument posed;
  RefineStage refined;
  LayoutDocument layout;  // final
  std::vector<std::string> warnings;
};

// Full chain. Errors carry the stage name (and object id when known).
PipelineResult run_pipeline(const SceneBundle& bundle, const AssetLibrary& library,
                            const PipelineConfig& config);

// Stage artifacts.
std::string parse_to_json(const SceneParse& parse);
SceneParse parse_from_json(const std::string& text);
SceneGraph graph_from_json(const std::string& text);
std::string retrieval_to_json(const RetrievalTable& table);
RetrievalTable retrieval_from_json(const std::string& text);

// Static mesh of the posed boxes for inspection.
void write_obj(const LayoutDocument& layout, const std::filesystem::path& path);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 14695981039346656037ull);
// Hash of every regular file below `dir` (relative paths and contents).
std::uint64_t hash_directory(const std::filesystem::path& dir);

}  // namespace layoutforge
