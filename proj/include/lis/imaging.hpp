#pragma once

// Radio images: min-max scaled per-antenna received power, one grayscale
// pixel per surface element, plus the feature vectors fed to the detectors.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lis/channel.hpp"

namespace lis {

struct RadioImage {
  int width = 0;   // surface columns
  int height = 0;  // surface rows
  std::vector<std::uint8_t> pixels;  // row-major
  std::size_t position = 0;
  int averaging = 1;

  std::size_t size() const { return pixels.size(); }
  friend bool operator==(const RadioImage&, const RadioImage&) = default;
};

enum class FeatureMode { kRawFlatten, kResized, kNormalized };

struct FeatureVector {
  std::vector<double> values;
  FeatureMode provenance = FeatureMode::kRawFlatten;
};

/// Elementwise mean of S frames taken at the same point with the same noise level.
PowerFrame average_frames(std::span<const PowerFrame> frames);

/// Pixel i = ceil(255 (w_i - w_min) / (w_max - w_min)), clamped to [0, 255].
/// A flat frame (w_max == w_min) maps to an all-zero image.
RadioImage to_image(const PowerFrame& frame, int width, int height, int averaging = 1);

/// Bilinear resampling with pixel-center alignment and edge clamping.
std::vector<double> resize_bilinear(std::span<const double> src, int width, int height,
                                    int target_width, int target_height);

/// kRawFlatten: row-major pixels / 255. kResized: bilinear resize to the target
/// grid, then flatten (upsampling allowed). kNormalized: kResized with the mean
/// removed and unit L2 norm (all zeros stay zero).
FeatureVector to_features(const RadioImage& image, FeatureMode mode = FeatureMode::kResized,
                          int target_width = 32, int target_height = 32);

/// Same transform for an image already scaled to [0, 1], e.g. a denoiser output.
FeatureVector to_features(std::span<const double> unit_pixels, int width, int height,
                          FeatureMode mode = FeatureMode::kResized, int target_width = 32,
                          int target_height = 32);

/// Binary PGM (P5), maxval 255.
void export_pgm(const RadioImage& image, const std::filesystem::path& path);
void write_pgm(std::ostream& out, const RadioImage& image);
RadioImage import_pgm(const std::filesystem::path& path);
RadioImage read_pgm(std::istream& in);

struct DatasetEntry {
  std::size_t sample_id = 0;
  std::size_t position = 0;
  std::size_t sample = 0;  // snapshot index at the position
  PointLabel label = PointLabel::kCorrect;
  std::string image_path;        // empty when features are inline
  std::vector<double> features;  // inline features, optional
};

/// Header: sample_id,position_id,label,snapshot_index,image_path,features
/// Inline features are ';'-separated in the last column.
void write_manifest(std::ostream& out, std::span<const DatasetEntry> entries);
std::vector<DatasetEntry> read_manifest(std::istream& in);

}  // namespace lis
