#include "lis/scenario.hpp"

#include <algorithm>
#include <stdexcept>

namespace lis {

Scene desk_scene() {
  Scene s;
  s.room = {22.0, 22.0, 4.0};
  s.carrier_hz = 3.5e9;
  s.tx_power_w = dbm_to_watts(20.0);
  s.max_paths = 10;
  s.lis.rows = 32;
  s.lis.cols = 32;
  s.lis.spacing = s.wavelength() / 2.0;
  const double half = 0.5 * (s.lis.cols - 1) * s.lis.spacing;
  s.lis.anchor = {11.0 - half, 0.05, 1.0};

  // Room boundary: back and side walls, floor, ceiling.
  s.reflectors.push_back({{0, 22, 0}, {22, 22, 4}, 0.6});
  s.reflectors.push_back({{0, 0, 0}, {0, 22, 4}, 0.5});
  s.reflectors.push_back({{22, 0, 0}, {22, 22, 4}, 0.5});
  s.reflectors.push_back({{0, 0, 0}, {22, 22, 0}, 0.4});
  s.reflectors.push_back({{0, 0, 4}, {22, 22, 4}, 0.3});
  // Metal shelving and machine housings.
  s.reflectors.push_back({{7.5, 1.0, 0}, {7.5, 5.0, 2.5}, 0.8});
  s.reflectors.push_back({{14.5, 1.5, 0}, {14.5, 4.5, 2.5}, 0.8});
  s.reflectors.push_back({{9.0, 6.0, 0}, {13.0, 6.0, 2.0}, 0.7});
  s.reflectors.push_back({{3.0, 10.0, 0}, {8.0, 10.0, 3.0}, 0.6});
  return s;
}

std::string route_kind_name(RouteKind kind) { return kind == RouteKind::kParallel ? "parallel" : "normal"; }

RouteKind route_kind_from(const std::string& name) {
  if (name == "parallel") return RouteKind::kParallel;
  if (name == "normal") return RouteKind::kNormal;
  throw std::invalid_argument("unknown route kind '" + name + "'");
}

namespace {

std::size_t anomalous_offset(const RouteSpec& spec) { return (spec.correct_points - spec.anomalous_points) / 2; }

}  // namespace

std::size_t counterpart(const RouteSpec& spec, std::size_t anomalous_index) {
  if (anomalous_index >= spec.anomalous_points) throw std::out_of_range("counterpart: index out of range");
  return anomalous_index + anomalous_offset(spec);
}

Trajectory build_routes(const Scene& scene, const RouteSpec& spec) {
  if (spec.correct_points < 1) throw std::invalid_argument("build_routes: need at least one correct point");
  if (spec.anomalous_points > spec.correct_points) {
    throw std::invalid_argument("build_routes: more anomalous than correct points");
  }
  if (!(spec.delta_d >= 0.0)) throw std::invalid_argument("build_routes: delta_d must be non-negative");
  if (!(spec.step > 0.0)) throw std::invalid_argument("build_routes: step must be positive");

  const double center = scene.lis.anchor.x + 0.5 * (scene.lis.cols - 1) * scene.lis.spacing;
  const double length = (spec.correct_points - 1) * spec.step;
  Vec3 start, along, offset;
  if (spec.kind == RouteKind::kParallel) {
    start = {center - 0.5 * length, scene.lis.anchor.y + spec.wall_distance, spec.height};
    along = {1, 0, 0};
    offset = {0, 1, 0};
  } else {
    start = {center, scene.lis.anchor.y + spec.wall_distance, spec.height};
    along = {0, 1, 0};
    offset = {1, 0, 0};
  }

  Trajectory t;
  for (std::size_t j = 0; j < spec.correct_points; ++j) {
    t.points.push_back(start + (spec.step * static_cast<double>(j)) * along);
    t.labels.push_back(PointLabel::kCorrect);
  }
  for (std::size_t j = 0; j < spec.anomalous_points; ++j) {
    t.points.push_back(t.points[counterpart(spec, j)] + spec.delta_d * offset);
    t.labels.push_back(PointLabel::kAnomalous);
  }
  validate(t, scene);
  return t;
}

Scene relocate_scatterers(const Scene& scene, Vec3 shift) {
  Scene out = scene;
  for (Reflector& r : out.reflectors) {
    const int axis = r.normal_axis();
    if (axis < 0) continue;
    const double plane = r.min[axis];
    if (plane <= 0.0 || plane >= scene.room[axis]) continue;  // room boundary
    for (int a = 0; a < 3; ++a) {
      const double lo = std::clamp(r.min[a] + shift[a], 0.0, scene.room[a]);
      const double hi = std::clamp(r.max[a] + shift[a], 0.0, scene.room[a]);
      r.min[a] = lo;
      r.max[a] = hi;
    }
  }
  validate(out);
  return out;
}

}  // namespace lis
