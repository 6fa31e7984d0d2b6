#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace bolt {

// Scene unit is the centimeter throughout.
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using Box3 = Eigen::AlignedBox3d;
using Tri = std::array<int, 3>;

inline constexpr double kMinTriangleArea = 1e-12;

} // namespace bolt
