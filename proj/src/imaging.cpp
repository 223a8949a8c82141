#include "lis/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lis {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_target(int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("to_features: target size must be positive");
}

FeatureVector finish_features(std::vector<double> values, FeatureMode mode) {
  if (mode == FeatureMode::kNormalized) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double sq = 0.0;
    for (double& v : values) {
      v -= mean;
      sq += v * v;
    }
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (double& v : values) v *= inv;
    }
  }
  return {std::move(values), mode};
}

}  // namespace

PowerFrame average_frames(std::span<const PowerFrame> frames) {
  if (frames.empty()) throw std::invalid_argument("average_frames: no frames");
  const PowerFrame& first = frames.front();
  PowerFrame out{first.position, first.sample, std::vector<double>(first.w.size(), 0.0), first.noise_variance};
  for (const PowerFrame& f : frames) {
    if (f.position != first.position || f.noise_variance != first.noise_variance ||
        f.w.size() != first.w.size()) {
      throw std::invalid_argument("average_frames: frames differ in position, noise level or size");
    }
    for (std::size_t i = 0; i < f.w.size(); ++i) out.w[i] += f.w[i];
  }
  const double inv = 1.0 / static_cast<double>(frames.size());
  for (double& v : out.w) v *= inv;
  return out;
}

RadioImage to_image(const PowerFrame& frame, int width, int height, int averaging) {
  if (width < 1 || height < 1 || static_cast<std::size_t>(width) * height != frame.w.size()) {
    throw std::invalid_argument("to_image: width * height must equal the element count");
  }
  if (frame.w.size() < 2) throw std::invalid_argument("to_image: need at least two elements");
  const auto [lo_it, hi_it] = std::minmax_element(frame.w.begin(), frame.w.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;

  RadioImage image{width, height, std::vector<std::uint8_t>(frame.w.size(), 0), frame.position, averaging};
  if (!(range > 0.0)) return image;
  for (std::size_t i = 0; i < frame.w.size(); ++i) {
    const double scaled = std::ceil((frame.w[i] - lo) * 255.0 / range);
    image.pixels[i] = static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
  }
  return image;
}

std::vector<double> resize_bilinear(std::span<const double> src, int width, int height,
                                    int target_width, int target_height) {
  if (static_cast<std::size_t>(width) * height != src.size()) {
    throw std::invalid_argument("resize_bilinear: source size mismatch");
  }
  check_target(target_width, target_height);
  std::vector<double> out(static_cast<std::size_t>(target_width) * target_height);
  const double sx = static_cast<double>(width) / target_width;
  const double sy = static_cast<double>(height) / target_height;
  for (int ty = 0; ty < target_height; ++ty) {
    const double fy = std::clamp((ty + 0.5) * sy - 0.5, 0.0, static_cast<double>(height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, height - 1);
    const double wy = fy - y0;
    for (int tx = 0; tx < target_width; ++tx) {
      const double fx = std::clamp((tx + 0.5) * sx - 0.5, 0.0, static_cast<double>(width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, width - 1);
      const double wx = fx - x0;
      const double top = src[y0 * width + x0] * (1.0 - wx) + src[y0 * width + x1] * wx;
      const double bottom = src[y1 * width + x0] * (1.0 - wx) + src[y1 * width + x1] * wx;
      out[static_cast<std::size_t>(ty) * target_width + tx] = top * (1.0 - wy) + bottom * wy;
    }
  }
  return out;
}

FeatureVector to_features(std::span<const double> unit_pixels, int width, int height, FeatureMode mode,
                          int target_width, int target_height) {
  if (mode == FeatureMode::kRawFlatten) {
    if (static_cast<std::size_t>(width) * height != unit_pixels.size()) {
      throw std::invalid_argument("to_features: source size mismatch");
    }
    return {std::vector<double>(unit_pixels.begin(), unit_pixels.end()), mode};
  }
  return finish_features(resize_bilinear(unit_pixels, width, height, target_width, target_height), mode);
}

FeatureVector to_features(const RadioImage& image, FeatureMode mode, int target_width, int target_height) {
  std::vector<double> unit(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), unit.begin(),
                 [](std::uint8_t p) { return p / 255.0; });
  return to_features(unit, image.width, image.height, mode, target_width, target_height);
}

void write_pgm(std::ostream& out, const RadioImage& image) {
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

void export_pgm(const RadioImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_pgm(out, image);
}

RadioImage read_pgm(std::istream& in) {
  auto next_token = [&in]() {
    std::string token;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string ignored;
        std::getline(in, ignored);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!token.empty()) break;
        continue;
      }
      token.push_back(c);
    }
    return token;
  };
  if (next_token() != "P5") throw std::runtime_error("pgm: not a binary P5 file");
  RadioImage image;
  image.width = std::stoi(next_token());
  image.height = std::stoi(next_token());
  if (std::stoi(next_token()) != 255) throw std::runtime_error("pgm: only maxval 255 is supported");
  if (image.width < 1 || image.height < 1) throw std::runtime_error("pgm: bad dimensions");
  image.pixels.resize(static_cast<std::size_t>(image.width) * image.height);
  in.read(reinterpret_cast<char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) throw std::runtime_error("pgm: truncated");
  return image;
}

RadioImage import_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_pgm(in);
}

void write_manifest(std::ostream& out, std::span<const DatasetEntry> entries) {
  out << "sample_id,position_id,label,snapshot_index,image_path,features\n";
  for (const DatasetEntry& e : entries) {
    out << e.sample_id << ',' << e.position << ','
        << (e.label == PointLabel::kCorrect ? "correct" : "anomalous") << ',' << e.sample << ','
        << e.image_path << ',';
    for (std::size_t k = 0; k < e.features.size(); ++k) {
      if (k) out << ';';
      out << format_double(e.features[k]);
    }
    out << '\n';
  }
}

std::vector<DatasetEntry> read_manifest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("sample_id", 0) != 0) {
    throw std::runtime_error("manifest: missing header");
  }
  std::vector<DatasetEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field[6];
    for (int k = 0; k < 6; ++k) std::getline(row, field[k], ',');
    DatasetEntry e;
    e.sample_id = std::stoul(field[0]);
    e.position = std::stoul(field[1]);
    if (field[2] == "correct") {
      e.label = PointLabel::kCorrect;
    } else if (field[2] == "anomalous") {
      e.label = PointLabel::kAnomalous;
    } else {
      throw std::runtime_error("manifest: unknown label '" + field[2] + "'");
    }
    e.sample = std::stoul(field[3]);
    e.image_path = field[4];
    std::istringstream feats(field[5]);
    std::string v;
    while (std::getline(feats, v, ';')) {
      if (!v.empty()) e.features.push_back(std::stod(v));
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace lis
