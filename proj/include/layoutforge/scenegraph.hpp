#pragma once

#include "layoutforge/geometry.hpp"
#include "layoutforge/ingest.hpp"

#include <map>
#include <set>
#include <utility>
#include <vector>

namespace layoutforge {

struct SupportVerdict {
  bool supported = false;
  double d_vertical = 0;
};

struct TreeEdge {
  MaskId parent = kFloorId;
  double d_vertical = 0;
};

// Floor-rooted support tree plus the ceiling and wall relations. All boxes
// referenced here live in the world frame (z up, floor at z = 0).
struct SceneGraph {
  std::map<MaskId, TreeEdge> parent;  // every tree node; floor children have parent -1
  std::set<MaskId> ceiling_set;
  std::vector<std::pair<MaskId, int>> wall_edges;
  std::set<MaskId> excluded;

  bool in_tree(MaskId id) const { return parent.count(id) != 0; }
  std::vector<MaskId> children(MaskId id) const;
  // Parents before children; siblings by ascending id.
  std::vector<MaskId> top_down() const;
  int depth(MaskId id) const;
  std::vector<MaskId> subtree(MaskId id) const;  // includes `id`
};

struct GraphConfig {
  double eps = 0.05;
  double wall_snap_tolerance = 0.05;
};

// Does box a support box b? Branches are tried in a fixed order: top-face
// contact, containment, then the recorded occlusion answer.
SupportVerdict supported_relationship(MaskId a_id, const Obb& a, MaskId b_id, const Obb& b,
                                      const OracleRecord& oracle, double eps);

// BFS from the floor-supported set. `room_walls` are the world-frame walls
// used to resolve and validate oracle wall contacts.
SceneGraph build_support_tree(const OracleRecord& oracle, const std::map<MaskId, Obb>& obbs,
                              const std::vector<Plane>& room_walls, const GraphConfig& config,
                              std::vector<std::string>* warnings = nullptr);

// Snaps boxes to their supports: floor children reach z = 0, contact children
// start at their parent's top, ceiling objects end at the ceiling.
std::map<MaskId, Obb> refine_obbs(const SceneGraph& graph, const std::map<MaskId, Obb>& obbs,
                                  const RoomInfo& room);

// Answers the qualitative questions from known boxes (used to build synthetic
// scenes). `parents` is the true support assignment.
struct GeometricOracle {
  double eps = 1e-4;

  OracleRecord answer(const std::map<MaskId, Obb>& boxes, const std::map<MaskId, MaskId>& parents,
                      const RoomInfo& room) const;
};

std::string graph_to_json(const SceneGraph& graph);

}  // namespace layoutforge
