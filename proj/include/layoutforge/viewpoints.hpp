#pragma once

#include "layoutforge/common.hpp"

#include <vector>

namespace layoutforge {

// Unit vertices of an icosahedron subdivided `level` times
// (12, 42, 162, ... vertices). Order is deterministic.
std::vector<Vec3> icosphere_vertices(int level);

// The 20 unit vertices of a regular dodecahedron.
std::vector<Vec3> dodecahedron_vertices();

// camera_from_object rotation of a camera placed along `direction` (object
// frame, pointing from the object towards the camera) looking at the object
// origin, with the object's +z up in the image. Camera axes: x right,
// y down, z forward.
Mat3 look_at_rotation(const Vec3& direction);

// camera_from_virtual rotation of a virtual camera at the camera center
// looking at `target` (camera frame), keeping `up` (camera frame) up.
Mat3 virtual_camera_rotation(const Vec3& target, const Vec3& up);

// Icosphere views used for templates (level 2, 162 views) with their
// camera_from_object rotations.
std::vector<Mat3> template_view_rotations();
std::vector<Mat3> thumbnail_view_rotations();

}  // namespace layoutforge
