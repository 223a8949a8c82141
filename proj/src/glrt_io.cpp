#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "lis/glrt.hpp"

namespace lis::glrt {
namespace {

constexpr std::array<char, 8> kMagic{'L', 'I', 'S', 'G', 'L', 'R', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("glrt model: truncated file");
  return v;
}

void put_vector(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_vector(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("glrt model: truncated file");
  return v;
}

}  // namespace

void save_model(std::ostream& out, const GlrtModel& model) {
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  const Config& c = model.config;
  put(out, c.alpha);
  put(out, c.alpha0);
  put<std::uint64_t>(out, c.n_train);
  put<std::uint64_t>(out, c.n_valid);
  put<std::uint64_t>(out, c.n_mc);
  put<std::uint64_t>(out, c.seed);
  put<std::uint32_t>(out, c.convention == BesselArgument::kPowerDensity ? 0 : 1);
  put(out, model.sigma2);
  const std::size_t m = model.element_count();
  put<std::uint64_t>(out, m);
  put<std::uint64_t>(out, model.points.size());
  for (const PointModel& p : model.points) {
    if (p.g0.size() != m || p.eps0.size() != m || p.fisher.size() != m) {
      throw std::invalid_argument("glrt model: inconsistent element counts");
    }
    put<std::uint64_t>(out, p.point);
    put_vector(out, p.g0);
    put_vector(out, p.eps0);
    put_vector(out, p.fisher);
    put(out, p.threshold);
  }
  if (!out) throw std::runtime_error("glrt model: write failed");
}

GlrtModel load_model(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("glrt model: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("glrt model: unsupported version " + std::to_string(version));
  GlrtModel model;
  Config& c = model.config;
  c.alpha = get<double>(in);
  c.alpha0 = get<double>(in);
  c.n_train = get<std::uint64_t>(in);
  c.n_valid = get<std::uint64_t>(in);
  c.n_mc = get<std::uint64_t>(in);
  c.seed = get<std::uint64_t>(in);
  c.convention = get<std::uint32_t>(in) == 0 ? BesselArgument::kPowerDensity : BesselArgument::kAsPrinted;
  model.sigma2 = get<double>(in);
  const auto m = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  model.points.resize(count);
  for (PointModel& p : model.points) {
    p.point = get<std::uint64_t>(in);
    p.g0 = get_vector(in, m);
    p.eps0 = get_vector(in, m);
    p.fisher = get_vector(in, m);
    p.threshold = get<double>(in);
  }
  return model;
}

void save_model(const std::filesystem::path& path, const GlrtModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_model(out, model);
}

GlrtModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_model(in);
}

}  // namespace lis::glrt
