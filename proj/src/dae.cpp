#include "lis/dae.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lis/kernels.hpp"
#include "lis/random.hpp"

namespace lis::dae {
namespace {

double activate(Activation a, double leak, double z) {
  switch (a) {
    case Activation::kLeakyRelu:
      return z >= 0.0 ? z : leak * z;
    case Activation::kLogistic:
      return 1.0 / (1.0 + std::exp(-z));
    case Activation::kLinear:
      return z;
  }
  return z;
}

// Derivative expressed through the pre-activation z and the output y.
double derivative(Activation a, double leak, double z, double y) {
  switch (a) {
    case Activation::kLeakyRelu:
      return z >= 0.0 ? 1.0 : leak;
    case Activation::kLogistic:
      return y * (1.0 - y);
    case Activation::kLinear:
      return 1.0;
  }
  return 1.0;
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_pairs(std::span<const ImagePair> pairs, std::size_t input) {
  for (const ImagePair& p : pairs) {
    if (p.corrupted.size() != input || p.target.size() != input) {
      throw std::invalid_argument("dae: image pair does not match input dimension");
    }
    if (p.snr_target_db < p.snr_corrupted_db) throw std::invalid_argument("dae: target SNR below corrupted SNR");
  }
}

// Working form of the network. The decoder is held transposed (l x R) so that
// every inner loop runs over the long image dimension.
struct Net {
  std::size_t input = 0;
  std::size_t latent = 0;
  Activation hidden = Activation::kLeakyRelu;
  Activation output = Activation::kLogistic;
  double leak = 0.2;
  std::vector<double> w, b, vt, b_prime;  // vt = W'^T
};

void transpose(std::span<const double> src, std::size_t rows, std::size_t cols, std::span<double> dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

Net to_net(const DaeModel& m) {
  Net n{m.input, m.latent, m.config.hidden, m.config.output, m.config.leak, m.w, m.b,
        std::vector<double>(m.w_prime.size()), m.b_prime};
  transpose(m.w_prime, m.input, m.latent, n.vt);
  return n;
}

void store(const Net& n, DaeModel& m) {
  m.w = n.w;
  m.b = n.b;
  m.b_prime = n.b_prime;
  transpose(n.vt, n.latent, n.input, m.w_prime);
}

struct Workspace {
  std::vector<double> z1, e, z2, y, d2, d1;
  explicit Workspace(const Net& n) : z1(n.latent), e(n.latent), z2(n.input), y(n.input), d2(n.input), d1(n.latent) {}
};

void run_forward(const Net& n, std::span<const double> c, Workspace& ws) {
  kernels::gemv(n.w, n.latent, n.input, c, ws.z1);
  for (std::size_t j = 0; j < n.latent; ++j) {
    ws.z1[j] += n.b[j];
    ws.e[j] = activate(n.hidden, n.leak, ws.z1[j]);
  }
  std::copy(n.b_prime.begin(), n.b_prime.end(), ws.z2.begin());
  kernels::gemv_transposed_add(n.vt, n.latent, n.input, ws.e, ws.z2);
  for (std::size_t i = 0; i < n.input; ++i) ws.y[i] = activate(n.output, n.leak, ws.z2[i]);
}

// Batch buffers for accumulate().
struct BatchSpace {
  std::vector<double> z1, e, d1;  // batch x latent
  std::vector<double> z2, y, d2;  // one chunk
};

constexpr std::size_t kChunk = 256;

// Mean loss over pairs[indices]; grad (same layout as Net) receives the mean
// gradient. The image dimension is walked in chunks so each weight tile is
// reused by the whole batch while it is cached.
double accumulate(const Net& n, std::span<const ImagePair> pairs, std::span<const std::size_t> indices, Net& grad,
                  BatchSpace& ws) {
  if (indices.empty()) throw std::invalid_argument("dae: empty batch");
  const std::size_t nb = indices.size(), r = n.input, l = n.latent;
  grad.w.assign(n.w.size(), 0.0);
  grad.b.assign(n.b.size(), 0.0);
  grad.vt.assign(n.vt.size(), 0.0);
  grad.b_prime.assign(n.b_prime.size(), 0.0);
  ws.z1.assign(nb * l, 0.0);
  ws.e.resize(nb * l);
  ws.d1.assign(nb * l, 0.0);
  ws.z2.resize(kChunk);
  ws.y.resize(kChunk);
  ws.d2.resize(kChunk);

  // Encoder.
  for (std::size_t c0 = 0; c0 < r; c0 += kChunk) {
    const std::size_t len = std::min(kChunk, r - c0);
    for (std::size_t b = 0; b < nb; ++b) {
      const std::span<const double> x(pairs[indices[b]].corrupted.data() + c0, len);
      for (std::size_t j = 0; j < l; ++j) ws.z1[b * l + j] += kernels::dot({n.w.data() + j * r + c0, len}, x);
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t j = 0; j < l; ++j) {
      double& z = ws.z1[b * l + j];
      z += n.b[j];
      ws.e[b * l + j] = activate(n.hidden, n.leak, z);
    }
  }

  // Decoder, loss, output deltas, decoder gradients and back-propagated deltas.
  const double scale = 2.0 / static_cast<double>(r);
  double total = 0.0;
  for (std::size_t c0 = 0; c0 < r; c0 += kChunk) {
    const std::size_t len = std::min(kChunk, r - c0);
    const std::span<double> z2(ws.z2.data(), len), d2(ws.d2.data(), len);
    for (std::size_t b = 0; b < nb; ++b) {
      const double* t = pairs[indices[b]].target.data() + c0;
      const double* e = ws.e.data() + b * l;
      std::copy(n.b_prime.begin() + c0, n.b_prime.begin() + c0 + len, z2.begin());
      for (std::size_t j = 0; j < l; ++j) kernels::axpy(e[j], {n.vt.data() + j * r + c0, len}, z2);
      for (std::size_t i = 0; i < len; ++i) {
        const double y = activate(n.output, n.leak, z2[i]);
        const double diff = y - t[i];
        total += diff * diff;
        d2[i] = scale * diff * derivative(n.output, n.leak, z2[i], y);
        grad.b_prime[c0 + i] += d2[i];
      }
      double* d1 = ws.d1.data() + b * l;
      for (std::size_t j = 0; j < l; ++j) {
        kernels::axpy(e[j], d2, {grad.vt.data() + j * r + c0, len});
        d1[j] += kernels::dot({n.vt.data() + j * r + c0, len}, d2);
      }
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t j = 0; j < l; ++j) {
      double& d = ws.d1[b * l + j];
      d *= derivative(n.hidden, n.leak, ws.z1[b * l + j], ws.e[b * l + j]);
      grad.b[j] += d;
    }
  }

  // Encoder gradients.
  for (std::size_t c0 = 0; c0 < r; c0 += kChunk) {
    const std::size_t len = std::min(kChunk, r - c0);
    for (std::size_t b = 0; b < nb; ++b) {
      const std::span<const double> x(pairs[indices[b]].corrupted.data() + c0, len);
      for (std::size_t j = 0; j < l; ++j) kernels::axpy(ws.d1[b * l + j], x, {grad.w.data() + j * r + c0, len});
    }
  }

  const double inv = 1.0 / static_cast<double>(nb);
  for (auto* v : {&grad.w, &grad.b, &grad.vt, &grad.b_prime}) {
    for (double& x : *v) x *= inv;
  }
  return total * inv / static_cast<double>(r);
}

struct Adam {
  std::vector<double> m, v;
  std::size_t step = 0;
  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  // Updates params in place; its moments live at [offset, offset + g.size()).
  void apply(const Config& c, std::vector<double>& params, const std::vector<double>& g, std::size_t offset,
             double bias1, double bias2) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      double& mi = m[offset + i];
      double& vi = v[offset + i];
      mi = c.beta1 * mi + (1.0 - c.beta1) * g[i];
      vi = c.beta2 * vi + (1.0 - c.beta2) * g[i] * g[i];
      params[i] -= c.learning_rate * (mi / bias1) / (std::sqrt(vi / bias2) + c.epsilon);
    }
  }
};

}  // namespace

DaeModel init_model(std::size_t input, const Config& config) {
  if (input == 0 || config.latent == 0) throw std::invalid_argument("dae: dimensions must be positive");
  DaeModel m;
  m.input = input;
  m.latent = config.latent;
  m.config = config;
  std::mt19937_64 rng(derive_seed(config.seed, {0x1417}));
  const double a = 1.0 / std::sqrt(static_cast<double>(input));
  const double a_prime = 1.0 / std::sqrt(static_cast<double>(config.latent));
  m.w.resize(config.latent * input);
  for (double& x : m.w) x = a * (2.0 * unit_uniform(rng) - 1.0);
  m.w_prime.resize(input * config.latent);
  for (double& x : m.w_prime) x = a_prime * (2.0 * unit_uniform(rng) - 1.0);
  m.b.assign(config.latent, 0.0);
  m.b_prime.assign(input, 0.0);
  return m;
}

void validate(const DaeModel& m) {
  if (m.input == 0 || m.latent == 0) throw std::invalid_argument("dae: dimensions must be positive");
  if (m.w.size() != m.latent * m.input || m.b.size() != m.latent || m.w_prime.size() != m.input * m.latent ||
      m.b_prime.size() != m.input) {
    throw std::invalid_argument("dae: parameter shapes do not match dimensions");
  }
  if (!all_finite(m.w) || !all_finite(m.b) || !all_finite(m.w_prime) || !all_finite(m.b_prime)) {
    throw std::invalid_argument("dae: non-finite parameter");
  }
}

Forward forward(const DaeModel& model, std::span<const double> input) {
  if (input.size() != model.input) throw std::invalid_argument("dae: input dimension mismatch");
  const Net n = to_net(model);
  Workspace ws(n);
  run_forward(n, input, ws);
  return {std::move(ws.e), std::move(ws.y)};
}

std::vector<double> denoise(const DaeModel& model, std::span<const double> input) {
  return forward(model, input).output;
}

double loss(std::span<const double> target, std::span<const double> output) {
  if (target.size() != output.size() || target.empty()) throw std::invalid_argument("dae: loss size mismatch");
  return kernels::squared_distance(target, output) / static_cast<double>(target.size());
}

double loss_and_gradients(const DaeModel& m, std::span<const ImagePair> pairs,
                          std::span<const std::size_t> indices, Gradients& grad) {
  validate(m);
  check_pairs(pairs, m.input);
  for (std::size_t i : indices) {
    if (i >= pairs.size()) throw std::out_of_range("dae: batch index out of range");
  }
  const Net n = to_net(m);
  Net g;
  BatchSpace ws;
  const double l = accumulate(n, pairs, indices, g, ws);
  grad.w = std::move(g.w);
  grad.b = std::move(g.b);
  grad.b_prime = std::move(g.b_prime);
  grad.w_prime.resize(m.w_prime.size());
  transpose(g.vt, m.latent, m.input, grad.w_prime);
  return l;
}

double mean_loss(const DaeModel& model, std::span<const ImagePair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("dae: no pairs");
  check_pairs(pairs, model.input);
  const Net n = to_net(model);
  Workspace ws(n);
  double total = 0.0;
  for (const ImagePair& p : pairs) {
    run_forward(n, p.corrupted, ws);
    total += loss(p.target, ws.y);
  }
  return total / static_cast<double>(pairs.size());
}

TrainResult train(std::span<const ImagePair> pairs, const Config& config) {
  if (pairs.empty()) throw std::invalid_argument("dae: no training pairs");
  return train(init_model(pairs.front().corrupted.size(), config), pairs);
}

TrainResult train(DaeModel model, std::span<const ImagePair> pairs) {
  validate(model);
  if (pairs.empty()) throw std::invalid_argument("dae: no training pairs");
  check_pairs(pairs, model.input);
  const Config c = model.config;
  if (c.batch_size == 0) throw std::invalid_argument("dae: batch size must be positive");
  if (!(c.learning_rate > 0.0) || !(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0) ||
      !(c.epsilon > 0.0)) {
    throw std::invalid_argument("dae: invalid optimizer settings");
  }

  TrainResult result;
  result.epoch_loss.reserve(c.epochs);
  Net net = to_net(model);
  Net grad;
  BatchSpace ws;
  Adam adam(model.parameter_count());
  std::vector<std::size_t> order(pairs.size());
  const std::size_t o_b = net.w.size(), o_vt = o_b + net.b.size(), o_bp = o_vt + net.vt.size();

  for (std::size_t epoch = 0; epoch < c.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(c.seed, {0x5EED, epoch}));
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += c.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + c.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const double l = accumulate(net, pairs, idx, grad, ws);
      if (!std::isfinite(l)) {
        std::ostringstream msg;
        msg << "dae: non-finite loss at epoch " << epoch << ", batch " << batch << " (loss " << l << ")";
        throw std::runtime_error(msg.str());
      }
      epoch_total += l * static_cast<double>(idx.size());
      ++adam.step;
      const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(adam.step));
      const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(adam.step));
      adam.apply(c, net.w, grad.w, 0, bias1, bias2);
      adam.apply(c, net.b, grad.b, o_b, bias1, bias2);
      adam.apply(c, net.vt, grad.vt, o_vt, bias1, bias2);
      adam.apply(c, net.b_prime, grad.b_prime, o_bp, bias1, bias2);
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(order.size()));
  }
  store(net, model);
  result.model = std::move(model);
  return result;
}

// Checkpoint ---------------------------------------------------------------

namespace {

constexpr std::array<char, 8> kMagic{'L', 'I', 'S', 'D', 'A', 'E', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("dae model: truncated file");
  return v;
}

void put_vector(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_vector(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("dae model: truncated file");
  return v;
}

Activation activation_from(std::uint32_t v) {
  if (v > 2) throw std::runtime_error("dae model: bad activation code");
  return static_cast<Activation>(v);
}

}  // namespace

void save_model(std::ostream& out, const DaeModel& model) {
  validate(model);
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  put<std::uint64_t>(out, model.input);
  put<std::uint64_t>(out, model.latent);
  const Config& c = model.config;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.hidden));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.output));
  put(out, c.leak);
  put(out, c.learning_rate);
  put(out, c.beta1);
  put(out, c.beta2);
  put(out, c.epsilon);
  put<std::uint64_t>(out, c.epochs);
  put<std::uint64_t>(out, c.batch_size);
  put<std::uint64_t>(out, c.seed);
  put_vector(out, model.w);
  put_vector(out, model.b);
  put_vector(out, model.w_prime);
  put_vector(out, model.b_prime);
  if (!out) throw std::runtime_error("dae model: write failed");
}

DaeModel load_model(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("dae model: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("dae model: unsupported version " + std::to_string(version));
  DaeModel m;
  m.input = get<std::uint64_t>(in);
  m.latent = get<std::uint64_t>(in);
  if (m.input == 0 || m.latent == 0 || m.input > (1u << 24) || m.latent > (1u << 16)) {
    throw std::runtime_error("dae model: implausible dimensions");
  }
  Config& c = m.config;
  c.latent = m.latent;
  c.hidden = activation_from(get<std::uint32_t>(in));
  c.output = activation_from(get<std::uint32_t>(in));
  c.leak = get<double>(in);
  c.learning_rate = get<double>(in);
  c.beta1 = get<double>(in);
  c.beta2 = get<double>(in);
  c.epsilon = get<double>(in);
  c.epochs = get<std::uint64_t>(in);
  c.batch_size = get<std::uint64_t>(in);
  c.seed = get<std::uint64_t>(in);
  m.w = get_vector(in, m.latent * m.input);
  m.b = get_vector(in, m.latent);
  m.w_prime = get_vector(in, m.input * m.latent);
  m.b_prime = get_vector(in, m.input);
  validate(m);
  return m;
}

void save_model(const std::filesystem::path& path, const DaeModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dae model: cannot open " + path.string());
  save_model(out, model);
}

DaeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dae model: cannot open " + path.string());
  return load_model(in);
}

void write_loss_csv(std::ostream& out, std::span<const double> epoch_loss) {
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, epoch_loss[e]);
    out << buf;
  }
}

}  // namespace lis::dae
