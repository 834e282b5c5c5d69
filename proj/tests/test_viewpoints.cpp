#include "helpers.hpp"
#include "layoutforge/viewpoints.hpp"

#include <doctest.h>

using namespace lft;

namespace {

void check_unit_distinct(const std::vector<Vec3>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v[i].norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t j = i + 1; j < v.size(); ++j) CHECK((v[i] - v[j]).norm() > 1e-3);
  }
}

}  // namespace

TEST_CASE("icosphere vertex counts") {
  CHECK(icosphere_vertices(0).size() == 12);
  CHECK(icosphere_vertices(1).size() == 42);
  const auto v = icosphere_vertices(2);
  CHECK(v.size() == 162);
  check_unit_distinct(v);
  CHECK(icosphere_vertices(2) == v);
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : v) sum += p;
  CHECK(sum.norm() < 1e-9);
}

TEST_CASE("dodecahedron vertices") {
  const auto v = dodecahedron_vertices();
  CHECK(v.size() == 20);
  check_unit_distinct(v);
  // Every vertex has three nearest neighbours at the same distance.
  for (const Vec3& p : v) {
    std::vector<double> d;
    for (const Vec3& q : v) {
      if (&p != &q) d.push_back((p - q).norm());
    }
    std::sort(d.begin(), d.end());
    CHECK(d[0] == doctest::Approx(d[2]).epsilon(1e-9));
    CHECK(d[3] > d[2] + 1e-3);
  }
}

TEST_CASE("look-at rotation") {
  for (const Vec3& dir : icosphere_vertices(2)) {
    if (std::abs(dir.z()) > 0.999) continue;
    const Mat3 R = look_at_rotation(dir);
    CHECK(is_rotation(R, 1e-12));
    // The object origin sits straight ahead of the camera.
    CHECK((R * (-dir)).normalized().isApprox(Vec3::UnitZ(), 1e-12));
    // Object up projects to image up (negative y).
    CHECK((R * Vec3::UnitZ()).y() < 0);
    CHECK(std::abs((R * Vec3::UnitZ()).x()) < 1e-12);
  }
  CHECK(is_rotation(look_at_rotation(Vec3::UnitZ()), 1e-12));
  CHECK(is_rotation(look_at_rotation(-Vec3::UnitZ()), 1e-12));
}

TEST_CASE("view rotation sets") {
  CHECK(template_view_rotations().size() == 162);
  CHECK(thumbnail_view_rotations().size() == 20);
  for (const Mat3& R : template_view_rotations()) CHECK(is_rotation(R, 1e-12));
}

TEST_CASE("virtual camera rotation") {
  const Vec3 target(1, -0.5, 3);
  const Vec3 up(0, -1, 0.1);
  const Mat3 R = virtual_camera_rotation(target, up);
  CHECK(is_rotation(R, 1e-12));
  // Columns are the virtual axes in the camera frame.
  CHECK((R.transpose() * target).normalized().isApprox(Vec3::UnitZ(), 1e-12));
  CHECK(std::abs((R.transpose() * up).x()) < 1e-12);
  CHECK((R.transpose() * up).y() < 0);
  CHECK(virtual_camera_rotation(Vec3::UnitZ(), -Vec3::UnitY()).isApprox(Mat3::Identity(), 1e-12));
}
