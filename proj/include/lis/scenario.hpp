#pragma once

// Built-in desk-scale industrial scene and the correct/anomalous route pair.

#include <cstddef>
#include <string>

#include "lis/channel.hpp"

namespace lis {

/// 22 x 22 x 4 m hall, 32 x 32 surface at half-wavelength spacing centered on
/// the y = 0 wall, reflecting walls, floor, ceiling and a few metal panels.
Scene desk_scene();

enum class RouteKind { kParallel, kNormal };

std::string route_kind_name(RouteKind kind);
RouteKind route_kind_from(const std::string& name);

struct RouteSpec {
  RouteKind kind = RouteKind::kParallel;
  double delta_d = 0.10;         // anomalous offset, meters
  std::size_t correct_points = 185;
  std::size_t anomalous_points = 182;
  double step = 0.02;            // spacing between consecutive correct points, meters
  double wall_distance = 2.0;    // parallel: route distance from the surface; normal: first point
  double height = 1.0;           // z of the transmitter
};

/// Correct points first, then anomalous points. The correct route is a
/// straight line parallel (kParallel) or normal (kNormal) to the surface wall,
/// centered on the surface columns. Anomalous point j is its correct
/// counterpart (j + offset, with the anomalous run centered on the correct one)
/// displaced by delta_d: away from the wall for kParallel, sideways for kNormal.
/// delta_d = 0 is allowed and yields coincident routes.
Trajectory build_routes(const Scene& scene, const RouteSpec& spec);

/// Index of the correct point an anomalous point was displaced from.
std::size_t counterpart(const RouteSpec& spec, std::size_t anomalous_index);

/// Scene with every interior reflector (one not lying on a room boundary)
/// translated by shift, clipped to stay inside the room.
Scene relocate_scatterers(const Scene& scene, Vec3 shift);

}  // namespace lis
