#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>
#include <string_view>

namespace layoutforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Mask ids are non-negative; -1 is reserved for "floor" in graph exports.
using MaskId = int;
using AssetId = std::string;

inline constexpr MaskId kFloorId = -1;

enum class ErrorCode {
  Io,
  Parse,
  Validation,
  DanglingId,
  MissingFeature,
  DimensionMismatch,
  NoFloor,
  Degenerate,
  NotUpright,
  MissingOracle,
  EmptyCategory,
  FineSelectionFailed,
  NoSubspace,
  NonPositiveExtent,
  Infeasible,
  StageDependency,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// True for errors caused by malformed or inconsistent input files.
bool is_input_error(ErrorCode code);

}  // namespace layoutforge
