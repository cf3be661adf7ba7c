// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// The three networks of one solver (solid temperature, liquid temperature,
// interface) with a shared flat parameter vector, field-set construction for
// plain and taped evaluation, and checkpoint documents.
//
// Checkpoint layout:
//
//   stefan-kan-checkpoint 1
//   problem <stefan1d|stefan2d>
//   kind <kan|oracle>
//   epoch <n>
//   net u_s      followed by a network document (see kan_io.hpp)
//   net u_l      ...
//   net interface ...
//   end
//
// An oracle checkpoint has no net sections; evaluating it substitutes the
// analytic fields for the networks.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "stefan_kan/analytic.hpp"
#include "stefan_kan/error.hpp"
#include "stefan_kan/kan.hpp"
#include "stefan_kan/kan_io.hpp"
#include "stefan_kan/physics.hpp"
#include "stefan_kan/random.hpp"
#include "stefan_kan/sampler.hpp"

namespace stefan_kan {

enum class ModelKind { kan, oracle };

struct NetworkSpec {
  std::vector<int> temperature_shape{2, 4, 4, 1};
  std::vector<int> interface_shape{1, 2, 2, 1};
  GridSpec grid;

  static NetworkSpec for_problem(Problem p) {
    NetworkSpec s;
    if (p == Problem::stefan2d) {
      s.temperature_shape = {3, 8, 8, 1};
      s.interface_shape = {3, 8, 8, 1};
    }
    return s;
  }
};

struct StefanModel {
  Problem problem = Problem::stefan1d;
  ModelKind kind = ModelKind::kan;
  KanNetwork u_s;
  KanNetwork u_l;
  KanNetwork interface;  // s(t) in 1D, φ(x, y, t) in 2D

  std::size_t num_params() const { return u_s.num_params() + u_l.num_params() + interface.num_params(); }
  std::size_t offset_u_l() const { return u_s.num_params(); }
  std::size_t offset_interface() const { return u_s.num_params() + u_l.num_params(); }

  std::vector<double> gather() const {
    std::vector<double> p;
    p.reserve(num_params());
    for (const KanNetwork* n : {&u_s, &u_l, &interface}) p.insert(p.end(), n->params().begin(), n->params().end());
    return p;
  }

  void scatter(std::span<const double> p) {
    if (p.size() != num_params()) throw ShapeError("parameter vector length differs from model size");
    std::size_t o = 0;
    for (KanNetwork* n : {&u_s, &u_l, &interface}) {
      auto dst = n->params();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = p[o + i];
      o += dst.size();
    }
  }
};

/// Affine maps from the physical space-time box to [−1, 1] per coordinate.
inline std::vector<AffineMap> space_time_normalizer(const PhysicsConfig& c) {
  std::vector<AffineMap> n;
  for (const Interval& iv : c.domain) n.push_back(AffineMap::to_unit(iv.lo, iv.hi));
  n.push_back(AffineMap::to_unit(c.t_start, c.t_end));
  return n;
}

inline std::uint64_t derive_seed(std::uint64_t seed, const char* name) { return Rng::substream(seed, name).next(); }

inline StefanModel make_model(const PhysicsConfig& c, const NetworkSpec& spec, std::uint64_t seed) {
  const int d = c.dim();
  if (spec.temperature_shape.empty() || spec.temperature_shape.front() != d + 1)
    throw ShapeError("temperature network input width must be " + std::to_string(d + 1));
  const int if_in = c.problem == Problem::stefan1d ? 1 : d + 1;
  if (spec.interface_shape.empty() || spec.interface_shape.front() != if_in)
    throw ShapeError("interface network input width must be " + std::to_string(if_in));
  StefanModel m;
  m.problem = c.problem;
  const auto norm = space_time_normalizer(c);
  m.u_s = init(spec.temperature_shape, spec.grid, derive_seed(seed, "net.u_s"), norm);
  m.u_l = init(spec.temperature_shape, spec.grid, derive_seed(seed, "net.u_l"), norm);
  std::vector<AffineMap> if_norm = c.problem == Problem::stefan1d ? std::vector<AffineMap>{norm.back()} : norm;
  m.interface = init(spec.interface_shape, spec.grid, derive_seed(seed, "net.interface"), if_norm);
  return m;
}

inline StefanModel make_oracle_model(Problem p) {
  StefanModel m;
  m.problem = p;
  m.kind = ModelKind::oracle;
  return m;
}

// ---------------------------------------------------------------------------
// Field sets.

using NetFields1D = FieldSet<NetField<2>, NetField<2>, InterfacePhi1D<NetField<1>>>;
using NetFields2D = FieldSet<NetField<3>, NetField<3>, NetField<3>>;
using TapedFields1D = FieldSet<TapedNetField<2>, TapedNetField<2>, InterfacePhi1D<TapedNetField<1>>>;
using TapedFields2D = FieldSet<TapedNetField<3>, TapedNetField<3>, TapedNetField<3>>;
using OracleFields1D = FieldSet<NeumannSolidField, NeumannLiquidField, InterfacePhi1D<NeumannInterfaceField>>;
using OracleFields2D = FieldSet<ConstantField3, FrankLiquidField, CircleSdfField>;

inline NetFields1D net_fields_1d(const StefanModel& m) {
  return {{&m.u_s}, {&m.u_l}, {NetField<1>{&m.interface}}};
}
inline NetFields2D net_fields_2d(const StefanModel& m) { return {{&m.u_s}, {&m.u_l}, {&m.interface}}; }

inline TapedFields1D taped_fields_1d(Tape& t, const StefanModel& m) {
  return {{&t, &m.u_s, 0}, {&t, &m.u_l, m.offset_u_l()}, {TapedNetField<1>{&t, &m.interface, m.offset_interface()}}};
}
inline TapedFields2D taped_fields_2d(Tape& t, const StefanModel& m) {
  return {{&t, &m.u_s, 0}, {&t, &m.u_l, m.offset_u_l()}, {&t, &m.interface, m.offset_interface()}};
}

inline OracleFields1D oracle_fields_1d(const PhysicsConfig& c) {
  const Neumann1D sol(c);
  return {{sol}, {sol}, {NeumannInterfaceField{sol}}};
}
inline OracleFields2D oracle_fields_2d(const PhysicsConfig& c) {
  return {{c.T_m}, {Frank2D(c)}, {c}};
}

/// Calls f(fields, std::integral_constant<std::size_t, N>) with the plain
/// field set matching the model's problem and kind (N = 2 for 1D, 3 for 2D).
template <class F>
decltype(auto) with_fields(const StefanModel& m, const PhysicsConfig& c, F&& f) {
  using N2 = std::integral_constant<std::size_t, 2>;
  using N3 = std::integral_constant<std::size_t, 3>;
  if (m.problem == Problem::stefan1d) {
    if (m.kind == ModelKind::oracle) return f(oracle_fields_1d(c), N2{});
    return f(net_fields_1d(m), N2{});
  }
  if (m.kind == ModelKind::oracle) return f(oracle_fields_2d(c), N3{});
  return f(net_fields_2d(m), N3{});
}

/// Level-set estimate used by the sampler.
inline PhiEstimate phi_estimate(const StefanModel& m, const PhysicsConfig& c) {
  if (m.kind == ModelKind::oracle) {
    const ExactSolution exact(c);
    return [exact](const SpaceTime& p) { return exact.phi(p); };
  }
  if (m.problem == Problem::stefan1d)
    return [&m](const SpaceTime& p) { return p[0] - forward(m.interface, std::span<const double>(&p[1], 1)); };
  return [&m](const SpaceTime& p) { return forward(m.interface, std::span<const double>(p.data(), 3)); };
}

inline LossBreakdown model_loss(const StefanModel& m, const Batches& b, const PhysicsConfig& c, const LossWeights& w,
                                PhysicsDiagnostics* diag = nullptr) {
  return with_fields(m, c, [&](const auto& f, auto n) { return assemble_loss<decltype(n)::value>(f, b, c, w, diag); });
}

/// Loss and its gradient with respect to model.gather() order.
inline LossBreakdown model_loss_and_gradient(const StefanModel& m, const Batches& b, const PhysicsConfig& c,
                                             const LossWeights& w, std::span<double> grad,
                                             PhysicsDiagnostics* diag = nullptr) {
  if (m.kind != ModelKind::kan) throw UnsupportedOperation("oracle models have no parameters");
  if (grad.size() != m.num_params()) throw ShapeError("gradient buffer length differs from model size");
  if (m.problem == Problem::stefan1d)
    return loss_and_gradient<2>([&](Tape& t) { return taped_fields_1d(t, m); }, b, c, w, grad, diag);
  return loss_and_gradient<3>([&](Tape& t) { return taped_fields_2d(t, m); }, b, c, w, grad, diag);
}

// ---------------------------------------------------------------------------
// Checkpoints.

inline constexpr const char* kCheckpointMagic = "stefan-kan-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& os, const StefanModel& m, long long epoch) {
  os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  os << "problem " << problem_name(m.problem) << '\n';
  os << "kind " << (m.kind == ModelKind::kan ? "kan" : "oracle") << '\n';
  os << "epoch " << epoch << '\n';
  if (m.kind == ModelKind::kan) {
    os << "net u_s\n";
    write_network(os, m.u_s);
    os << "net u_l\n";
    write_network(os, m.u_l);
    os << "net interface\n";
    write_network(os, m.interface);
  }
  os << "end\n";
}

struct Checkpoint {
  StefanModel model;
  long long epoch = 0;
};

inline Checkpoint read_checkpoint(std::istream& is) {
  detail::TokenReader r(is);
  const std::string magic = r.next("header");
  if (magic != kCheckpointMagic)
    throw FormatError(FormatError::Kind::version, "not a checkpoint document (header '" + magic + "')");
  const long long version = parse_int(r.next("version"), "version");
  if (version != kCheckpointVersion)
    throw FormatError(FormatError::Kind::version, "unsupported checkpoint version " + std::to_string(version));
  Checkpoint cp;
  r.expect("problem");
  const std::string prob = r.next("problem name");
  if (prob == "stefan1d")
    cp.model.problem = Problem::stefan1d;
  else if (prob == "stefan2d")
    cp.model.problem = Problem::stefan2d;
  else
    throw FormatError(FormatError::Kind::value, "unknown problem '" + prob + "'");
  r.expect("kind");
  const std::string kind = r.next("kind");
  if (kind == "kan")
    cp.model.kind = ModelKind::kan;
  else if (kind == "oracle")
    cp.model.kind = ModelKind::oracle;
  else
    throw FormatError(FormatError::Kind::value, "unknown model kind '" + kind + "'");
  r.expect("epoch");
  cp.epoch = parse_int(r.next("epoch"), "epoch");
  if (cp.model.kind == ModelKind::kan) {
    for (auto [name, net] : {std::pair{"u_s", &cp.model.u_s}, std::pair{"u_l", &cp.model.u_l},
                             std::pair{"interface", &cp.model.interface}}) {
      r.expect("net");
      r.expect(name);
      *net = read_network(is);
    }
  }
  r.expect("end");
  return cp;
}

inline void save_checkpoint(const std::string& path, const StefanModel& m, long long epoch) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw Error("cannot write checkpoint " + tmp);
    write_checkpoint(os, m, epoch);
    if (!os) throw Error("failed writing checkpoint " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot move checkpoint into place at " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open checkpoint " + path);
  return read_checkpoint(is);
}

/// Throws ShapeError when a checkpoint does not fit the configuration.
inline void check_compatible(const StefanModel& m, const PhysicsConfig& c, const NetworkSpec& spec) {
  if (m.problem != c.problem) throw ShapeError("checkpoint problem differs from the configuration");
  if (m.kind == ModelKind::oracle) return;
  const auto same_grid = [&](const KanNetwork& n) {
    const GridSpec g = n.grid_spec();
    return g.lo == spec.grid.lo && g.hi == spec.grid.hi && g.intervals == spec.grid.intervals &&
           g.degree == spec.grid.degree;
  };
  if (m.u_s.shape() != spec.temperature_shape || m.u_l.shape() != spec.temperature_shape)
    throw ShapeError("checkpoint temperature network shape differs from the configuration");
  if (m.interface.shape() != spec.interface_shape)
    throw ShapeError("checkpoint interface network shape differs from the configuration");
  if (!same_grid(m.u_s) || !same_grid(m.u_l) || !same_grid(m.interface))
    throw ShapeError("checkpoint spline grid differs from the configuration");
}

}  // namespace stefan_kan
