#pragma once

#include "layoutforge/ingest.hpp"
#include "layoutforge/scenegraph.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace layoutforge {

// Floor-plan grid of category labels in the frame of the longest wall.
// Square and symmetric about the center of the footprints' bounding box.
struct LayoutGrid {
  double cell = 0.1;
  int n = 0;                         // n x n cells
  std::vector<std::string> labels;   // row-major, "" = empty

  const std::string& at(int i, int j) const { return labels[static_cast<std::size_t>(j) * n + i]; }
};

// Half-size (cells) needed to cover the layout's footprints.
int layout_grid_half_cells(const LayoutDocument& layout, double cell = 0.1);
LayoutGrid rasterize_layout(const LayoutDocument& layout, int half_cells, double cell = 0.1);

// Fraction of agreeing labels among cells labeled in either grid, maximized
// over quarter turns and mirroring. Throws NoFloor when a floor is missing.
double layout_similarity(const LayoutDocument& a, const LayoutDocument& b, double cell = 0.1);
double grid_similarity(const LayoutGrid& a, const LayoutGrid& b);

// Fraction of errors <= threshold. Throws Validation on an empty list.
double map_at(std::span<const double> errors, double threshold);
std::vector<std::pair<double, double>> map_curve(std::span<const double> errors,
                                                 std::span<const double> thresholds);
// Mean mAP over thresholds 1..cutoff degrees.
double rotation_auc(std::span<const double> errors_deg, int cutoff_deg = 60);
// Mean mAP over thresholds 0.01..cutoff meters in 1 cm steps.
double translation_auc(std::span<const double> errors_m, double cutoff_m = 0.5);

struct SceneCheck {
  double support_correct_pct = 100;
  int intersection_pairs = 0;
  std::vector<MaskId> unsupported;
};

// Support correct: the child's bottom lies within one voxel cell of the
// surface right below it (floor or parent voxels).
SceneCheck scene_checks(const LayoutDocument& layout, const SceneGraph& graph,
                        const AssetLibrary* library, double voxel_cell = 0.05);

// Rebuilds a tree-only graph from the objects' support records.
SceneGraph graph_from_layout(const LayoutDocument& layout);

struct RecoveryStats {
  int gt = 0;
  int matched = 0;
  int preserved = 0;
  double recovery_pct() const { return gt ? 100.0 * matched / gt : 100.0; }
  double preservation_pct() const { return matched ? 100.0 * preserved / matched : 100.0; }
};

struct Recovery {
  RecoveryStats primary, secondary, overall;
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (pred index, gt index)
};

// Primary objects stand on the floor, hang from the ceiling, or lie within
// 0.1 m of a wall.
bool is_primary(const LayoutObject& obj, const RoomInfo& room, double wall_distance = 0.1);

// Greedy matching among same-category pairs by camera-frame center
// distance (<= gate). Preservation compares library categories.
Recovery recovery_rates(const LayoutDocument& pred, const LayoutDocument& gt, double gate = 0.5);

struct EvalReport {
  double support_correct_pct = 0;
  double intersection_pairs = 0;
  Recovery recovery;
  double rotation_auc60 = 0;
  double translation_auc05 = 0;
  std::vector<std::pair<double, double>> rotation_map_curve;
  std::vector<std::pair<double, double>> translation_map_curve;
  double layout_similarity = 0;
  double support_edge_accuracy_pct = 0;
  std::vector<double> rotation_errors_deg;
  std::vector<double> translation_errors_m;

  std::string to_json() const;
};

// Edges compare (parent, kind class) of objects sharing a source mask.
double support_edge_accuracy(const LayoutDocument& pred, const LayoutDocument& gt);

EvalReport evaluate(const LayoutDocument& pred, const LayoutDocument& gt,
                    const AssetLibrary* library, double voxel_cell = 0.05);

void write_map_csv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace layoutforge
