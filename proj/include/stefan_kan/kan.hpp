// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Kolmogorov–Arnold networks. A layer of shape [m, n] owns one learnable
// univariate function per (input i, output j) edge,
//
//   phi_ij(z) = base_w_ij * silu(z) + spline_w_ij * sum_r c_ijr B_r(z),
//
// and output j is the plain sum over i of phi_ij(z_i). Input coordinates are
// mapped affinely to the spline range before the first layer.
//
// Parameters of the whole network live in one flat vector, edge-major:
// edge (i, j) of a layer occupies [c_0 .. c_{G+k-1}, base_w, spline_w].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "stefan_kan/error.hpp"
#include "stefan_kan/jet.hpp"
#include "stefan_kan/random.hpp"
#include "stefan_kan/splines.hpp"
#include "stefan_kan/tape.hpp"

namespace stefan_kan {

struct KanLayer {
  int fan_in = 0;
  int fan_out = 0;
  SplineGrid grid;
  std::size_t offset = 0;  // first parameter of this layer in the network vector

  std::size_t params_per_edge() const { return static_cast<std::size_t>(grid.num_basis()) + 2; }
  std::size_t num_params() const {
    return static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out) * params_per_edge();
  }
  std::size_t edge_offset(int i, int j) const {
    return offset + (static_cast<std::size_t>(i) * fan_out + j) * params_per_edge();
  }
};

/// z = scale * x + shift for one input coordinate.
struct AffineMap {
  double scale = 1.0;
  double shift = 0.0;

  /// Maps [lo, hi] onto [-1, 1].
  static AffineMap to_unit(double lo, double hi) {
    return {2.0 / (hi - lo), -(hi + lo) / (hi - lo)};
  }
  bool operator==(const AffineMap&) const = default;
};

struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  int intervals = 5;
  int degree = 3;
};

class KanNetwork {
 public:
  KanNetwork() = default;

  KanNetwork(std::vector<int> shape, const GridSpec& grid, std::vector<AffineMap> normalizer = {})
      : shape_(std::move(shape)), normalizer_(std::move(normalizer)) {
    if (shape_.size() < 2) throw ShapeError("network shape needs at least an input and an output width");
    for (int w : shape_)
      if (w < 1) throw ShapeError("network layer widths must be positive");
    if (normalizer_.empty()) normalizer_.assign(static_cast<std::size_t>(shape_.front()), AffineMap{});
    if (normalizer_.size() != static_cast<std::size_t>(shape_.front()))
      throw ShapeError("normalizer length differs from input width");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < shape_.size(); ++l) {
      KanLayer layer{shape_[l], shape_[l + 1], make_grid(grid.lo, grid.hi, grid.intervals, grid.degree), offset};
      offset += layer.num_params();
      layers_.push_back(std::move(layer));
    }
    params_.assign(offset, 0.0);
  }

  const std::vector<int>& shape() const { return shape_; }
  const std::vector<KanLayer>& layers() const { return layers_; }
  const std::vector<AffineMap>& normalizer() const { return normalizer_; }
  void set_normalizer(std::vector<AffineMap> n) {
    if (n.size() != normalizer_.size()) throw ShapeError("normalizer length differs from input width");
    normalizer_ = std::move(n);
  }
  int input_dim() const { return shape_.front(); }
  int output_dim() const { return shape_.back(); }
  std::size_t num_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  double& coeff(std::size_t layer, int i, int j, int r) { return params_[layers_[layer].edge_offset(i, j) + r]; }
  double& base_w(std::size_t layer, int i, int j) {
    const auto& L = layers_[layer];
    return params_[L.edge_offset(i, j) + L.params_per_edge() - 2];
  }
  double& spline_w(std::size_t layer, int i, int j) {
    const auto& L = layers_[layer];
    return params_[L.edge_offset(i, j) + L.params_per_edge() - 1];
  }

  GridSpec grid_spec() const {
    const auto& g = layers_.front().grid;
    return {g.lo, g.hi, g.intervals, g.degree};
  }

 private:
  std::vector<int> shape_;
  std::vector<KanLayer> layers_;
  std::vector<AffineMap> normalizer_;
  std::vector<double> params_;
};

/// Σ over layers of m·n·(G+k+2).
inline std::size_t parameter_count(const std::vector<int>& shape, const GridSpec& grid) {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < shape.size(); ++l)
    total += static_cast<std::size_t>(shape[l]) * shape[l + 1] * (grid.intervals + grid.degree + 2);
  return total;
}

/// Spline coefficients ~ Normal(0, 0.1); base and spline weights 1.
inline KanNetwork init(const std::vector<int>& shape, const GridSpec& grid, std::uint64_t seed,
                       std::vector<AffineMap> normalizer = {}) {
  if (shape.empty()) throw ShapeError("empty network shape");
  KanNetwork net(shape, grid, std::move(normalizer));
  Rng rng = Rng::substream(seed, "kan.init");
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const KanLayer& L = net.layers()[l];
    for (int i = 0; i < L.fan_in; ++i)
      for (int j = 0; j < L.fan_out; ++j) {
        for (int r = 0; r < L.grid.num_basis(); ++r) net.coeff(l, i, j, r) = rng.normal(0.0, 0.1);
        net.base_w(l, i, j) = 1.0;
        net.spline_w(l, i, j) = 1.0;
      }
  }
  return net;
}

// ---------------------------------------------------------------------------
// Evaluation core.

namespace detail {

struct EdgeSums {
  double s0, s1, s2, s3;
};

/// Forward intermediates kept for the hand-written adjoint. For layer l the
/// inputs are z[zoff[l] + i] with jets d1/d2[(zoff[l] + i) * K + k].
struct NetTrace {
  std::vector<std::size_t> zoff;
  std::vector<double> z, d1, d2;
  std::vector<LocalBasis> basis;
  std::vector<SiluDerivs> silu;
  std::vector<EdgeSums> sums;  // per edge, layer-major then (i, j)
};

inline EdgeSums spline_sums(const double* c, const LocalBasis& lb, int order) {
  EdgeSums s{0.0, 0.0, 0.0, 0.0};
  const double* cc = c + lb.first;
  for (int r = 0; r < lb.count; ++r) {
    s.s0 += cc[r] * lb.ders[0][r];
    if (order >= 1) s.s1 += cc[r] * lb.ders[1][r];
    if (order >= 2) s.s2 += cc[r] * lb.ders[2][r];
    if (order >= 3) s.s3 += cc[r] * lb.ders[3][r];
  }
  return s;
}

/// Evaluates the network at x with jets along `dirs` (K = dirs.size()).
/// Writes value, d1[K], d2[K] into `out` (size 1 + 2K). When `trace` is
/// given, stores what the adjoint needs (basis derivatives one order higher).
inline void evaluate_core(const KanNetwork& net, std::span<const double> x, std::span<const int> dirs,
                          int order, std::span<double> out, NetTrace* trace) {
  const std::size_t K = dirs.size();
  const int m0 = net.input_dim();
  if (x.size() != static_cast<std::size_t>(m0))
    throw ShapeError("input length " + std::to_string(x.size()) + " differs from network input width " +
                     std::to_string(m0));
  if (net.output_dim() != 1) throw ShapeError("only scalar-output networks are evaluated");
  const int basis_order = std::min(order + (trace != nullptr ? 1 : 0), kMaxBasisDerivative);
  const auto params = net.params();

  // Sized for the widest layer.
  int widest = 0;
  for (int w : net.shape()) widest = std::max(widest, w);
  thread_local std::vector<double> buf;
  buf.assign(static_cast<std::size_t>(widest) * (1 + 2 * K) * 2, 0.0);
  double* cz = buf.data();
  double* cd1 = cz + widest;
  double* cd2 = cd1 + widest * K;
  double* nz = cd2 + widest * K;
  double* nd1 = nz + widest;
  double* nd2 = nd1 + widest * K;

  for (int i = 0; i < m0; ++i) {
    if (!std::isfinite(x[i])) throw EvaluationError("network input is not finite", x[i]);
    const AffineMap& a = net.normalizer()[i];
    cz[i] = a.scale * x[i] + a.shift;
    for (std::size_t k = 0; k < K; ++k) {
      cd1[i * K + k] = dirs[k] == i ? a.scale : 0.0;
      cd2[i * K + k] = 0.0;
    }
  }

  if (trace != nullptr) {
    std::size_t total_inputs = 0;
    for (const auto& L : net.layers()) total_inputs += static_cast<std::size_t>(L.fan_in);
    trace->zoff.clear();
    trace->z.resize(total_inputs);
    trace->d1.resize(total_inputs * K);
    trace->d2.resize(total_inputs * K);
    trace->basis.resize(total_inputs);
    trace->silu.resize(total_inputs);
    std::size_t total_edges = 0;
    for (const auto& L : net.layers()) total_edges += static_cast<std::size_t>(L.fan_in) * L.fan_out;
    trace->sums.resize(total_edges);
  }
  std::size_t ebase = 0;

  std::size_t zbase = 0;
  for (const KanLayer& L : net.layers()) {
    const int m = L.fan_in, n = L.fan_out;
    const std::size_t ppe = L.params_per_edge();
    std::fill(nz, nz + n, 0.0);
    std::fill(nd1, nd1 + n * K, 0.0);
    std::fill(nd2, nd2 + n * K, 0.0);
    if (trace != nullptr) trace->zoff.push_back(zbase);
    for (int i = 0; i < m; ++i) {
      if (!std::isfinite(cz[i])) throw EvaluationError("hidden activation is not finite", cz[i]);
      const LocalBasis lb = local_basis(L.grid, cz[i], basis_order);
      const SiluDerivs sd = silu_derivs(cz[i]);
      if (trace != nullptr) {
        trace->z[zbase + i] = cz[i];
        trace->basis[zbase + i] = lb;
        trace->silu[zbase + i] = sd;
        for (std::size_t k = 0; k < K; ++k) {
          trace->d1[(zbase + i) * K + k] = cd1[i * K + k];
          trace->d2[(zbase + i) * K + k] = cd2[i * K + k];
        }
      }
      for (int j = 0; j < n; ++j) {
        const double* p = params.data() + L.edge_offset(i, j);
        const double wb = p[ppe - 2], ws = p[ppe - 1];
        const EdgeSums s = spline_sums(p, lb, basis_order);
        if (trace != nullptr) trace->sums[ebase + static_cast<std::size_t>(i) * n + j] = s;
        nz[j] += wb * sd.f0 + ws * s.s0;
        if (order >= 1) {
          const double g1 = wb * sd.f1 + ws * s.s1;
          const double g2 = order >= 2 ? wb * sd.f2 + ws * s.s2 : 0.0;
          for (std::size_t k = 0; k < K; ++k) {
            const double a1 = cd1[i * K + k];
            nd1[j * K + k] += g1 * a1;
            if (order >= 2) nd2[j * K + k] += g2 * a1 * a1 + g1 * cd2[i * K + k];
          }
        }
      }
    }
    zbase += static_cast<std::size_t>(m);
    ebase += static_cast<std::size_t>(m) * n;
    std::swap(cz, nz);
    std::swap(cd1, nd1);
    std::swap(cd2, nd2);
  }

  out[0] = cz[0];
  for (std::size_t k = 0; k < K; ++k) {
    out[1 + k] = order >= 1 ? cd1[k] : 0.0;
    out[1 + K + k] = order >= 2 ? cd2[k] : 0.0;
  }
}

/// Reverse sweep through one traced evaluation. `adj_out` holds adjoints of
/// (value, d1[K], d2[K]); parameter adjoints are added at param_adj[param
/// index] and input-coordinate adjoints into x_adj.
inline void backward_core(const KanNetwork& net, const NetTrace& tr, std::size_t K, int order,
                          std::span<const double> adj_out, std::span<double> param_adj, std::span<double> x_adj) {
  const auto params = net.params();
  int widest = 0;
  for (int w : net.shape()) widest = std::max(widest, w);
  thread_local std::vector<double> buf;
  buf.assign(static_cast<std::size_t>(widest) * (1 + 2 * K) * 2, 0.0);
  double* az = buf.data();
  double* ad1 = az + widest;
  double* ad2 = ad1 + widest * K;
  double* pz = ad2 + widest * K;
  double* pd1 = pz + widest;
  double* pd2 = pd1 + widest * K;

  az[0] = adj_out[0];
  for (std::size_t k = 0; k < K; ++k) {
    ad1[k] = order >= 1 ? adj_out[1 + k] : 0.0;
    ad2[k] = order >= 2 ? adj_out[1 + K + k] : 0.0;
  }

  std::size_t eb_end = tr.sums.size();
  for (std::size_t l = net.layers().size(); l-- > 0;) {
    const KanLayer& L = net.layers()[l];
    const int m = L.fan_in, n = L.fan_out;
    const std::size_t ppe = L.params_per_edge();
    const std::size_t zb = tr.zoff[l];
    const std::size_t eb = eb_end - static_cast<std::size_t>(m) * n;
    eb_end = eb;
    std::fill(pz, pz + m, 0.0);
    std::fill(pd1, pd1 + m * K, 0.0);
    std::fill(pd2, pd2 + m * K, 0.0);
    for (int i = 0; i < m; ++i) {
      const LocalBasis& lb = tr.basis[zb + i];
      const SiluDerivs& sd = tr.silu[zb + i];
      const double* d1 = tr.d1.data() + (zb + i) * K;
      const double* d2 = tr.d2.data() + (zb + i) * K;
      for (int j = 0; j < n; ++j) {
        const double a0 = az[j];
        double a1 = 0.0, a2 = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          a1 += ad1[j * K + k] * d1[k] + ad2[j * K + k] * d2[k];
          a2 += ad2[j * K + k] * d1[k] * d1[k];
        }
        if (a0 == 0.0 && a1 == 0.0 && a2 == 0.0) continue;
        const std::size_t eo = L.edge_offset(i, j);
        const double* p = params.data() + eo;
        const double wb = p[ppe - 2], ws = p[ppe - 1];
        const EdgeSums& s = tr.sums[eb + static_cast<std::size_t>(i) * n + j];
        const double g1 = wb * sd.f1 + ws * s.s1;
        const double g2 = wb * sd.f2 + ws * s.s2;
        const double g3 = wb * sd.f3 + ws * s.s3;

        double* ga = param_adj.data() + eo;
        ga[ppe - 2] += a0 * sd.f0 + a1 * sd.f1 + a2 * sd.f2;
        ga[ppe - 1] += a0 * s.s0 + a1 * s.s1 + a2 * s.s2;
        for (int r = 0; r < lb.count; ++r)
          ga[lb.first + r] += ws * (a0 * lb.ders[0][r] + a1 * lb.ders[1][r] + a2 * lb.ders[2][r]);

        pz[i] += a0 * g1 + a1 * g2 + a2 * g3;
        for (std::size_t k = 0; k < K; ++k) {
          pd1[i * K + k] += ad1[j * K + k] * g1 + 2.0 * ad2[j * K + k] * g2 * d1[k];
          pd2[i * K + k] += ad2[j * K + k] * g1;
        }
      }
    }
    std::swap(az, pz);
    std::swap(ad1, pd1);
    std::swap(ad2, pd2);
  }

  // The first-layer jets are constants; only the values depend on x.
  for (int i = 0; i < net.input_dim(); ++i) x_adj[i] += net.normalizer()[i].scale * az[i];
}

template <std::size_t N>
std::array<int, N> request_dirs(JetRequest req, std::size_t& count) {
  std::array<int, N> d{};
  count = 0;
  if (req.order == 0) return d;
  for (std::size_t i = 0; i < N; ++i)
    if (req.has(i)) d[count++] = static_cast<int>(i);
  return d;
}

}  // namespace detail

inline double forward(const KanNetwork& net, std::span<const double> x) {
  double out[1];
  detail::evaluate_core(net, x, {}, 0, out, nullptr);
  return out[0];
}

/// (u, ∂u/∂x_d, ∂²u/∂x_d²) along input coordinate d.
inline Jet2<double> forward_jet(const KanNetwork& net, std::span<const double> x, int direction) {
  if (direction < 0 || direction >= net.input_dim()) throw ShapeError("jet direction out of range");
  double out[3];
  const int dirs[1] = {direction};
  detail::evaluate_core(net, x, dirs, 2, out, nullptr);
  return {out[0], out[1], out[2]};
}

/// All requested directions in one pass (shared basis evaluations).
template <std::size_t N>
PointJet<double, N> forward_jets(const KanNetwork& net, const std::array<double, N>& x, JetRequest req) {
  std::size_t K = 0;
  const auto dirs = detail::request_dirs<N>(req, K);
  std::array<double, 1 + 2 * N> out{};
  detail::evaluate_core(net, x, std::span<const int>(dirs.data(), K), req.order, std::span<double>(out.data(), 1 + 2 * K),
                        nullptr);
  PointJet<double, N> r;
  r.v = out[0];
  for (std::size_t k = 0; k < K; ++k) {
    r.d1[dirs[k]] = out[1 + k];
    r.d2[dirs[k]] = out[1 + K + k];
  }
  return r;
}

namespace detail {

class NetBlock final : public Tape::Block {
 public:
  void reinit(const KanNetwork& net, std::size_t param_offset, std::size_t K, int order) {
    net_ = &net;
    param_offset_ = param_offset;
    K_ = K;
    order_ = order;
    inputs_.clear();
    first_output_ = -1;
  }

  void backward(const Tape::Adjoints& adj) const override {
    std::array<double, 9> adj_out{};
    bool any = false;
    for (std::size_t j = 0; j < 1 + 2 * K_; ++j) {
      adj_out[j] = adj[first_output_ + static_cast<std::int32_t>(j)];
      any = any || adj_out[j] != 0.0;
    }
    if (!any) return;
    std::array<double, 4> x_adj{};
    backward_core(*net_, trace_, K_, order_, std::span<const double>(adj_out.data(), 1 + 2 * K_),
                  adj.params.subspan(param_offset_, net_->num_params()),
                  std::span<double>(x_adj.data(), inputs_.size()));
    for (std::size_t i = 0; i < inputs_.size(); ++i)
      if (inputs_[i] >= 0) adj[inputs_[i]] += x_adj[i];
  }

  NetTrace& trace() { return trace_; }
  std::vector<std::int32_t>& inputs() { return inputs_; }
  void set_first_output(std::int32_t f) { first_output_ = f; }

 private:
  const KanNetwork* net_ = nullptr;
  std::size_t param_offset_ = 0;
  std::size_t K_ = 0;
  int order_ = 0;
  NetTrace trace_;
  std::vector<std::int32_t> inputs_;
  std::int32_t first_output_ = -1;
};

}  // namespace detail

/// Taped evaluation: network parameters are tape leaves starting at
/// `param_offset`; input coordinates may themselves be taped. Requires
/// tape.num_params() >= param_offset + net.num_params().
template <std::size_t N>
PointJet<Var, N> forward_jets(Tape& tape, const KanNetwork& net, std::size_t param_offset,
                              const std::array<Var, N>& x, JetRequest req) {
  static_assert(N <= 4);
  if (param_offset + net.num_params() > tape.num_params()) throw ShapeError("tape has too few parameter slots");
  std::size_t K = 0;
  const auto dirs = detail::request_dirs<N>(req, K);
  std::array<double, N> xv{};
  for (std::size_t i = 0; i < N; ++i) xv[i] = x[i].value;
  std::array<double, 1 + 2 * N> out{};
  auto& block = tape.next_block<detail::NetBlock>();
  block.reinit(net, param_offset, K, req.order);
  detail::evaluate_core(net, xv, std::span<const int>(dirs.data(), K), req.order,
                        std::span<double>(out.data(), 1 + 2 * K), &block.trace());
  for (std::size_t i = 0; i < N; ++i) block.inputs().push_back(x[i].tape == &tape ? x[i].index : -1);
  const std::int32_t first = tape.record_block(std::span<const double>(out.data(), 1 + 2 * K));
  block.set_first_output(first);

  PointJet<Var, N> r;
  r.v = Var(&tape, first, out[0]);
  for (std::size_t k = 0; k < K; ++k) {
    r.d1[dirs[k]] = Var(&tape, first + 1 + static_cast<std::int32_t>(k), out[1 + k]);
    if (req.order >= 2)
      r.d2[dirs[k]] = Var(&tape, first + 1 + static_cast<std::int32_t>(K + k), out[1 + K + k]);
  }
  return r;
}

}  // namespace stefan_kan
