#pragma once

// Interval bound propagation training for fully connected ReLU networks.

#include "nnv/graph.hpp"
#include "nnv/interval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nnv {

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layer sizes n_0 (inputs), hidden sizes..., n_k (outputs). Hidden layers
/// use ReLU; the last layer is affine.
struct Mlp {
  std::vector<std::size_t> sizes;

  [[nodiscard]] std::size_t layers() const { return sizes.size() - 1; }
  [[nodiscard]] std::size_t inputs() const { return sizes.front(); }
  [[nodiscard]] std::size_t outputs() const { return sizes.back(); }

  /// theta layout: layer by layer, neuron by neuron, weights then bias.
  [[nodiscard]] std::size_t weight(std::size_t l, std::size_t k, std::size_t j) const {
    return offset(l) + k * (sizes[l] + 1) + j;
  }
  [[nodiscard]] std::size_t bias(std::size_t l, std::size_t k) const { return offset(l) + k * (sizes[l] + 1) + sizes[l]; }
  [[nodiscard]] std::size_t offset(std::size_t l) const {
    std::size_t o = 0;
    for (std::size_t i = 0; i < l; ++i) o += sizes[i + 1] * (sizes[i] + 1);
    return o;
  }
  [[nodiscard]] std::size_t num_params() const { return offset(layers()); }

  void check() const {
    if (sizes.size() < 2) throw std::invalid_argument("network needs at least an input and an output layer");
    for (auto s : sizes)
      if (s == 0) throw std::invalid_argument("empty layer");
  }
};

template <class T>
std::vector<T> init_params(const Mlp& m, std::uint64_t seed) {
  m.check();
  std::mt19937_64 rng(seed);
  std::vector<T> theta(m.num_params(), T(0));
  for (std::size_t l = 0; l < m.layers(); ++l) {
    double r = 1.0 / std::sqrt(static_cast<double>(m.sizes[l]));
    std::uniform_real_distribution<double> u(-r, r);
    for (std::size_t k = 0; k < m.sizes[l + 1]; ++k)
      for (std::size_t j = 0; j < m.sizes[l]; ++j) theta[m.weight(l, k, j)] = static_cast<T>(u(rng));
  }
  return theta;
}

/// The network as a graph with exact rational weights.
template <class T>
Graph to_graph(const Mlp& m, const std::vector<T>& theta) {
  m.check();
  if (theta.size() != m.num_params()) throw std::invalid_argument("parameter vector has wrong length");
  Graph g;
  std::vector<NodeId> prev;
  for (std::size_t j = 0; j < m.inputs(); ++j) prev.push_back(g.add_input());
  for (std::size_t l = 0; l < m.layers(); ++l) {
    std::vector<NodeId> cur;
    for (std::size_t k = 0; k < m.sizes[l + 1]; ++k) {
      RationalVec w;
      for (std::size_t j = 0; j < m.sizes[l]; ++j) w.push_back(from_double(static_cast<double>(theta[m.weight(l, k, j)])));
      NodeId a = g.add_affine(std::move(w), from_double(static_cast<double>(theta[m.bias(l, k)])), prev);
      cur.push_back(l + 1 < m.layers() ? g.add_node(fn::Relu{}, {a}) : a);
    }
    prev = cur;
  }
  g.set_outputs(prev);
  return g;
}

/// The loss sum_k (f_k(x) - y_k)^2 as a network: one difference and one
/// square node per output, then a summing affine node.
template <class T>
Graph loss_graph(const Mlp& m, const std::vector<T>& theta, const std::vector<T>& y) {
  Graph g = to_graph(m, theta);
  auto outs = g.outputs();
  std::vector<NodeId> sq;
  for (std::size_t k = 0; k < outs.size(); ++k) {
    NodeId d = g.add_affine({Rational(1)}, -from_double(static_cast<double>(y.at(k))), {outs[k]});
    sq.push_back(g.add_node(fn::Square{}, {d}));
  }
  NodeId s = g.add_affine(RationalVec(sq.size(), Rational(1)), Rational(0), sq);
  g.set_outputs({s});
  return g;
}

// ---------------------------------------------------------------------------
// Flattened interval transformers

template <class T>
struct IbpTape {
  // per layer: input bounds and pre-activation bounds
  std::vector<std::vector<T>> in_lo, in_hi, z_lo, z_hi;
};

template <class T>
struct IbpForward {
  T loss_lo{};
  T loss_hi{};
  std::vector<T> out_lo, out_hi;
  IbpTape<T> tape;
};

template <class T>
std::pair<T, T> relu_af(T l, T u) {
  return {l > 0 ? l : T(0), u > 0 ? u : T(0)};
}

/// Interval forward pass of the loss over the box [lo, hi].
template <class T>
IbpForward<T> ibp_forward(const Mlp& m, const std::vector<T>& theta, const std::vector<T>& lo, const std::vector<T>& hi,
                          const std::vector<T>& y) {
  if (lo.size() != m.inputs() || hi.size() != m.inputs()) throw std::invalid_argument("box dimension mismatch");
  if (y.size() != m.outputs()) throw std::invalid_argument("target dimension mismatch");
  if (theta.size() != m.num_params()) throw std::invalid_argument("parameter vector has wrong length");
  IbpForward<T> f;
  std::vector<T> al = lo;
  std::vector<T> au = hi;
  for (std::size_t l = 0; l < m.layers(); ++l) {
    std::vector<T> zl(m.sizes[l + 1]);
    std::vector<T> zu(m.sizes[l + 1]);
    for (std::size_t k = 0; k < zl.size(); ++k) {
      T sl = theta[m.bias(l, k)];
      T su = sl;
      for (std::size_t j = 0; j < m.sizes[l]; ++j) {
        T w = theta[m.weight(l, k, j)];
        if (w >= 0) {
          sl += w * al[j];
          su += w * au[j];
        } else {
          sl += w * au[j];
          su += w * al[j];
        }
      }
      zl[k] = sl;
      zu[k] = su;
    }
    f.tape.in_lo.push_back(al);
    f.tape.in_hi.push_back(au);
    f.tape.z_lo.push_back(zl);
    f.tape.z_hi.push_back(zu);
    if (l + 1 < m.layers()) {
      for (std::size_t k = 0; k < zl.size(); ++k) std::tie(zl[k], zu[k]) = relu_af(zl[k], zu[k]);
    }
    al = std::move(zl);
    au = std::move(zu);
  }
  f.out_lo = al;
  f.out_hi = au;
  for (std::size_t k = 0; k < y.size(); ++k) {
    T dl = al[k] - y[k];
    T du = au[k] - y[k];
    T l2 = dl * dl;
    T u2 = du * du;
    f.loss_hi += std::max(l2, u2);
    f.loss_lo += (dl <= 0 && du >= 0) ? T(0) : std::min(l2, u2);
  }
  return f;
}

/// Gradient of loss_hi with respect to theta by reverse mode through the
/// flattened transformers. At kinks the lower branch is taken: relu'(0) = 0,
/// max(a, b) with a = b follows a, and w = 0 counts as non-negative.
template <class T>
std::vector<T> ibp_grad(const Mlp& m, const std::vector<T>& theta, const IbpForward<T>& f, const std::vector<T>& y) {
  std::vector<T> g(theta.size(), T(0));
  std::size_t L = m.layers();
  // adjoints of the current layer's pre-activation bounds
  std::vector<T> gl(m.outputs(), T(0));
  std::vector<T> gu(m.outputs(), T(0));
  for (std::size_t k = 0; k < y.size(); ++k) {
    T dl = f.out_lo[k] - y[k];
    T du = f.out_hi[k] - y[k];
    if (dl * dl >= du * du)
      gl[k] = 2 * dl;
    else
      gu[k] = 2 * du;
  }
  for (std::size_t l = L; l-- > 0;) {
    const auto& al = f.tape.in_lo[l];
    const auto& au = f.tape.in_hi[l];
    std::vector<T> pl(m.sizes[l], T(0));
    std::vector<T> pu(m.sizes[l], T(0));
    for (std::size_t k = 0; k < m.sizes[l + 1]; ++k) {
      g[m.bias(l, k)] += gl[k] + gu[k];
      for (std::size_t j = 0; j < m.sizes[l]; ++j) {
        std::size_t wi = m.weight(l, k, j);
        T w = theta[wi];
        if (w >= 0) {
          g[wi] += gl[k] * al[j] + gu[k] * au[j];
          pl[j] += gl[k] * w;
          pu[j] += gu[k] * w;
        } else {
          g[wi] += gl[k] * au[j] + gu[k] * al[j];
          pu[j] += gl[k] * w;
          pl[j] += gu[k] * w;
        }
      }
    }
    if (l == 0) break;
    // through the relu of the previous layer
    const auto& zl = f.tape.z_lo[l - 1];
    const auto& zu = f.tape.z_hi[l - 1];
    gl.assign(m.sizes[l], T(0));
    gu.assign(m.sizes[l], T(0));
    for (std::size_t j = 0; j < m.sizes[l]; ++j) {
      gl[j] = zl[j] > 0 ? pl[j] : T(0);
      gu[j] = zu[j] > 0 ? pu[j] : T(0);
    }
  }
  return g;
}

/// Concrete loss and its gradient by ordinary backpropagation.
template <class T>
std::pair<T, std::vector<T>> std_loss_grad(const Mlp& m, const std::vector<T>& theta, const std::vector<T>& x,
                                           const std::vector<T>& y) {
  std::vector<std::vector<T>> acts{x};
  std::vector<std::vector<T>> pre;
  for (std::size_t l = 0; l < m.layers(); ++l) {
    std::vector<T> z(m.sizes[l + 1]);
    for (std::size_t k = 0; k < z.size(); ++k) {
      T s = theta[m.bias(l, k)];
      for (std::size_t j = 0; j < m.sizes[l]; ++j) s += theta[m.weight(l, k, j)] * acts.back()[j];
      z[k] = s;
    }
    pre.push_back(z);
    if (l + 1 < m.layers())
      for (auto& v : z) v = v > 0 ? v : T(0);
    acts.push_back(z);
  }
  T loss = 0;
  std::vector<T> d(m.outputs());
  for (std::size_t k = 0; k < d.size(); ++k) {
    T e = acts.back()[k] - y[k];
    loss += e * e;
    d[k] = 2 * e;
  }
  std::vector<T> g(theta.size(), T(0));
  for (std::size_t l = m.layers(); l-- > 0;) {
    std::vector<T> prev(m.sizes[l], T(0));
    for (std::size_t k = 0; k < m.sizes[l + 1]; ++k) {
      g[m.bias(l, k)] += d[k];
      for (std::size_t j = 0; j < m.sizes[l]; ++j) {
        g[m.weight(l, k, j)] += d[k] * acts[l][j];
        prev[j] += d[k] * theta[m.weight(l, k, j)];
      }
    }
    if (l == 0) break;
    for (std::size_t j = 0; j < prev.size(); ++j) prev[j] = pre[l - 1][j] > 0 ? prev[j] : T(0);
    d = std::move(prev);
  }
  return {loss, g};
}

template <class T>
T concrete_loss(const Mlp& m, const std::vector<T>& theta, const std::vector<T>& x, const std::vector<T>& y) {
  return ibp_forward(m, theta, x, x, y).loss_hi;
}

// ---------------------------------------------------------------------------
// Training

struct Example {
  std::vector<double> x;
  int y = 0;
};

using Dataset = std::vector<Example>;

inline void check_dataset(const Dataset& d) {
  if (d.empty()) throw std::invalid_argument("empty dataset");
  for (const auto& e : d) {
    if (e.x.size() != d.front().x.size()) throw std::invalid_argument("examples have different dimensions");
    if (e.y != 0 && e.y != 1) throw std::invalid_argument("labels must be 0 or 1");
  }
}

/// CSV, one example per row, label in the last column.
inline Dataset read_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        if (d.empty() && v.empty()) break;  // header row
        throw std::invalid_argument("row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
    }
    if (v.empty()) continue;
    if (v.size() < 2) throw std::invalid_argument("row " + std::to_string(row) + ": need features and a label");
    Example e;
    e.y = static_cast<int>(v.back());
    v.pop_back();
    e.x = std::move(v);
    d.push_back(std::move(e));
  }
  check_dataset(d);
  return d;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dataset(in);
}

inline void write_dataset(std::ostream& out, const Dataset& d) {
  out.precision(17);
  for (const auto& e : d) {
    for (double v : e.x) out << v << ',';
    out << e.y << '\n';
  }
}

/// Two interleaved half circles with Gaussian noise, alternating labels.
inline Dataset two_moons(std::size_t n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, noise);
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    double t = angle(rng);
    Example e;
    e.y = static_cast<int>(i % 2);
    if (e.y == 0)
      e.x = {std::cos(t), std::sin(t)};
    else
      e.x = {1 - std::cos(t), 0.5 - std::sin(t)};
    e.x[0] += gauss(rng);
    e.x[1] += gauss(rng);
    d.push_back(std::move(e));
  }
  return d;
}

struct TrainConfig {
  double eta = 0.05;
  std::size_t batch = 16;  // examples per mini-batch
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  double eps = 0;  // l-infinity radius of the training region
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss_hi = 0;   // mean robust loss bound
  double loss = 0;      // mean concrete loss
};

struct TrainResult {
  std::vector<double> theta;
  std::vector<EpochLog> log;
};

/// Mini-batch SGD on (1/m) sum loss_hi(theta, R(x_i), y_i). Deterministic in the seed.
inline TrainResult train_ibp(const Dataset& data, const Mlp& m, const TrainConfig& cfg,
                             const std::function<void(const EpochLog&)>& on_epoch = {}) {
  check_dataset(data);
  m.check();
  if (!(cfg.eta > 0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.batch < 1) throw std::invalid_argument("batch size must be at least 1");
  if (cfg.eps < 0) throw std::invalid_argument("negative radius");
  if (data.front().x.size() != m.inputs()) throw std::invalid_argument("dataset dimension does not match the network");
  if (m.outputs() != 1) throw std::invalid_argument("binary training needs one output");

  TrainResult r;
  r.theta = init_params<double>(m, cfg.seed);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t ep = 1; ep <= cfg.epochs; ++ep) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log{ep, 0, 0};
    for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
      std::size_t e = std::min(order.size(), b + cfg.batch);
      std::vector<double> grad(r.theta.size(), 0.0);
      for (std::size_t i = b; i < e; ++i) {
        const Example& ex = data[order[i]];
        std::vector<double> lo = ex.x;
        std::vector<double> hi = ex.x;
        for (std::size_t j = 0; j < lo.size(); ++j) {
          lo[j] -= cfg.eps;
          hi[j] += cfg.eps;
        }
        std::vector<double> y{static_cast<double>(ex.y)};
        auto f = ibp_forward(m, r.theta, lo, hi, y);
        if (!std::isfinite(f.loss_hi))
          throw TrainError("loss diverged in epoch " + std::to_string(ep) + "; lower the learning rate");
        log.loss_hi += f.loss_hi;
        log.loss += concrete_loss(m, r.theta, ex.x, y);
        auto g = ibp_grad(m, r.theta, f, y);
        for (std::size_t k = 0; k < g.size(); ++k) grad[k] += g[k];
      }
      double scale = cfg.eta / static_cast<double>(e - b);
      for (std::size_t k = 0; k < grad.size(); ++k) r.theta[k] -= scale * grad[k];
    }
    log.loss_hi /= static_cast<double>(data.size());
    log.loss /= static_cast<double>(data.size());
    if (!std::isfinite(log.loss_hi)) throw TrainError("loss diverged in epoch " + std::to_string(ep));
    r.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return r;
}

inline void write_training_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out.precision(12);
  out << "epoch,loss_hi,loss\n";
  for (const auto& l : log) out << l.epoch << ',' << l.loss_hi << ',' << l.loss << '\n';
}

/// Label 1 iff f(x) >= 1/2.
inline int predict(const Graph& g, const std::vector<double>& x) {
  RationalVec in;
  for (double v : x) in.push_back(from_double(v));
  return evaluate(g, in).at(0) >= Rational(1, 2) ? 1 : 0;
}

/// Fraction of examples whose label is certified by interval analysis on the
/// l-infinity ball of radius eps: the whole output interval lies on the
/// correct side of 1/2.
inline double robust_fraction(const Graph& g, const Dataset& data, const Rational& eps) {
  std::size_t ok = 0;
  for (const auto& e : data) {
    Box box;
    for (double v : e.x) box.emplace_back(from_double(v) - eps, from_double(v) + eps);
    RInterval out = iv_analyze(g, box).at(0);
    if (e.y == 1 ? out.lo >= Rational(1, 2) : out.hi < Rational(1, 2)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

inline double accuracy(const Graph& g, const Dataset& data) {
  std::size_t ok = 0;
  for (const auto& e : data) ok += predict(g, e.x) == e.y;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

}  // namespace nnv
