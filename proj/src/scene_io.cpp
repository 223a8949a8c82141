#include "lis/scene_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lis {
namespace {

using nlohmann::json;

Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument(std::string("expected a 3-element array for ") + what);
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_to(Vec3 v) { return json::array({v.x, v.y, v.z}); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scene scene_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  Scene scene;
  scene.room = vec3_from(j.at("room"), "room");
  scene.carrier_hz = j.value("carrier_hz", 3.5e9);
  if (j.contains("tx_power_w")) {
    scene.tx_power_w = j.at("tx_power_w").get<double>();
  } else {
    scene.tx_power_w = dbm_to_watts(j.value("tx_power_dbm", 20.0));
  }
  scene.max_paths = j.value("max_paths", 10);

  const json& lis = j.at("lis");
  scene.lis.anchor = vec3_from(lis.at("anchor"), "lis.anchor");
  scene.lis.rows = lis.value("rows", 32);
  scene.lis.cols = lis.value("cols", 32);
  if (lis.contains("spacing_m")) {
    scene.lis.spacing = lis.at("spacing_m").get<double>();
  } else {
    scene.lis.spacing = lis.value("spacing_wavelengths", 0.5) * scene.wavelength();
  }

  if (j.contains("reflectors")) {
    for (const json& r : j.at("reflectors")) {
      scene.reflectors.push_back({vec3_from(r.at("min"), "reflector.min"),
                                  vec3_from(r.at("max"), "reflector.max"), r.value("gamma", 0.7)});
    }
  }
  validate(scene);
  return scene;
}

Scene load_scene(const std::filesystem::path& path) { return scene_from_json_text(read_text_file(path)); }

std::string scene_to_json_text(const Scene& scene) {
  json j;
  j["room"] = vec3_to(scene.room);
  j["carrier_hz"] = scene.carrier_hz;
  j["tx_power_w"] = scene.tx_power_w;
  j["max_paths"] = scene.max_paths;
  j["lis"] = {{"anchor", vec3_to(scene.lis.anchor)},
              {"rows", scene.lis.rows},
              {"cols", scene.lis.cols},
              {"spacing_m", scene.lis.spacing}};
  j["reflectors"] = json::array();
  for (const Reflector& r : scene.reflectors) {
    j["reflectors"].push_back({{"min", vec3_to(r.min)}, {"max", vec3_to(r.max)}, {"gamma", r.gamma}});
  }
  return j.dump(2);
}

Trajectory trajectory_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  Trajectory t;
  for (const json& p : j.at("points")) t.points.push_back(vec3_from(p, "trajectory point"));
  if (j.contains("labels")) {
    for (const json& l : j.at("labels")) {
      const std::string label = l.get<std::string>();
      if (label == "correct") {
        t.labels.push_back(PointLabel::kCorrect);
      } else if (label == "anomalous") {
        t.labels.push_back(PointLabel::kAnomalous);
      } else {
        throw std::invalid_argument("trajectory: unknown label '" + label + "'");
      }
    }
  } else {
    t.labels.assign(t.points.size(), PointLabel::kCorrect);
  }
  if (t.points.empty()) throw std::invalid_argument("trajectory: no points");
  if (t.labels.size() != t.points.size()) throw std::invalid_argument("trajectory: label count mismatch");
  return t;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  return trajectory_from_json_text(read_text_file(path));
}

std::string trajectory_to_json_text(const Trajectory& trajectory) {
  json j;
  j["points"] = json::array();
  j["labels"] = json::array();
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    j["points"].push_back(vec3_to(trajectory.points[k]));
    j["labels"].push_back(trajectory.labels[k] == PointLabel::kCorrect ? "correct" : "anomalous");
  }
  return j.dump(1);
}

void write_snapshot_csv(std::ostream& out, const ChannelSnapshot& snapshot) {
  out << "antenna,re,im\n";
  for (std::size_t i = 0; i < snapshot.h.size(); ++i) {
    out << i << ',' << format_double(snapshot.h[i].real()) << ',' << format_double(snapshot.h[i].imag())
        << '\n';
  }
}

ChannelSnapshot read_snapshot_csv(std::istream& in, std::size_t position) {
  ChannelSnapshot snapshot;
  snapshot.position = position;
  std::string line;
  if (!std::getline(in, line) || line.rfind("antenna", 0) != 0) {
    throw std::runtime_error("snapshot csv: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string idx, re, im;
    std::getline(row, idx, ',');
    std::getline(row, re, ',');
    std::getline(row, im, ',');
    if (std::stoul(idx) != snapshot.h.size()) throw std::runtime_error("snapshot csv: antenna out of order");
    snapshot.h.emplace_back(std::stod(re), std::stod(im));
  }
  return snapshot;
}

}  // namespace lis
