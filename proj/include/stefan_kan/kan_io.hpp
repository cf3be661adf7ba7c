// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Text network documents. Doubles go through std::to_chars (shortest
// round-trip form) so a write/read cycle is bit-exact. Layout:
//
//   stefan-kan-network 1
//   shape <w0> <w1> ... <wL>
//   grid <lo> <hi> <intervals> <degree>
//   normalizer <count>
//   <scale> <shift>            (one line per input)
//   params <count>
//   <value>                    (one line per parameter, layer-major,
//                               edge-major, [c_0..c_{G+k-1}, base_w, spline_w])
//   end

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "stefan_kan/error.hpp"
#include "stefan_kan/kan.hpp"

namespace stefan_kan {

inline constexpr const char* kNetworkMagic = "stefan-kan-network";
inline constexpr int kNetworkVersion = 1;

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
    throw FormatError(FormatError::Kind::value, what + ": bad number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& what) {
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw FormatError(FormatError::Kind::value, what + ": bad integer '" + s + "'");
  return v;
}

inline void write_network(std::ostream& os, const KanNetwork& net) {
  os << kNetworkMagic << ' ' << kNetworkVersion << '\n';
  os << "shape";
  for (int w : net.shape()) os << ' ' << w;
  os << '\n';
  const GridSpec g = net.grid_spec();
  os << "grid " << format_double(g.lo) << ' ' << format_double(g.hi) << ' ' << g.intervals << ' ' << g.degree << '\n';
  os << "normalizer " << net.normalizer().size() << '\n';
  for (const AffineMap& a : net.normalizer()) os << format_double(a.scale) << ' ' << format_double(a.shift) << '\n';
  os << "params " << net.num_params() << '\n';
  for (double p : net.params()) os << format_double(p) << '\n';
  os << "end\n";
}

inline std::string serialize(const KanNetwork& net) {
  std::ostringstream os;
  write_network(os, net);
  return os.str();
}

namespace detail {

/// Whitespace tokenizer that reports truncation instead of returning garbage.
class TokenReader {
 public:
  explicit TokenReader(std::istream& is) : is_(is) {}
  std::string next(const std::string& what) {
    std::string tok;
    if (!(is_ >> tok)) throw FormatError(FormatError::Kind::truncated, "document ends before " + what);
    return tok;
  }
  void expect(const std::string& word) {
    const std::string tok = next("'" + word + "'");
    if (tok != word) throw FormatError(FormatError::Kind::value, "expected '" + word + "', found '" + tok + "'");
  }

 private:
  std::istream& is_;
};

}  // namespace detail

inline KanNetwork read_network(std::istream& is) {
  detail::TokenReader r(is);
  const std::string magic = r.next("header");
  if (magic != kNetworkMagic)
    throw FormatError(FormatError::Kind::version, "not a network document (header '" + magic + "')");
  const long long version = parse_int(r.next("version"), "version");
  if (version != kNetworkVersion)
    throw FormatError(FormatError::Kind::version, "unsupported network format version " + std::to_string(version));

  r.expect("shape");
  std::vector<int> shape;
  for (;;) {
    const std::string tok = r.next("grid");
    if (tok == "grid") break;
    const long long w = parse_int(tok, "shape");
    if (w < 1 || w > 1 << 20) throw FormatError(FormatError::Kind::shape, "layer width out of range: " + tok);
    shape.push_back(static_cast<int>(w));
  }
  if (shape.size() < 2) throw FormatError(FormatError::Kind::shape, "shape needs at least two widths");
  GridSpec g;
  g.lo = parse_double(r.next("grid lo"), "grid lo");
  g.hi = parse_double(r.next("grid hi"), "grid hi");
  g.intervals = static_cast<int>(parse_int(r.next("grid intervals"), "grid intervals"));
  g.degree = static_cast<int>(parse_int(r.next("grid degree"), "grid degree"));
  if (!(g.hi > g.lo) || g.intervals < 1 || g.degree < 0 || g.degree > kMaxSplineDegree)
    throw FormatError(FormatError::Kind::shape, "invalid grid specification");

  r.expect("normalizer");
  const long long nn = parse_int(r.next("normalizer count"), "normalizer count");
  if (nn != shape.front()) throw FormatError(FormatError::Kind::shape, "normalizer count differs from input width");
  std::vector<AffineMap> norm(static_cast<std::size_t>(nn));
  for (auto& a : norm) {
    a.scale = parse_double(r.next("normalizer scale"), "normalizer scale");
    a.shift = parse_double(r.next("normalizer shift"), "normalizer shift");
  }

  KanNetwork net(shape, g, norm);
  r.expect("params");
  const long long np = parse_int(r.next("parameter count"), "parameter count");
  if (np < 0 || static_cast<std::size_t>(np) != net.num_params())
    throw FormatError(FormatError::Kind::shape, "parameter count " + std::to_string(np) + " does not match shape (" +
                                                    std::to_string(net.num_params()) + ")");
  auto p = net.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::string what = "parameter " + std::to_string(i);
    const std::string tok = r.next(what);
    if (tok == "end") throw FormatError(FormatError::Kind::truncated, "document ends before " + what);
    p[i] = parse_double(tok, what);
  }
  r.expect("end");
  return net;
}

inline KanNetwork deserialize(const std::string& doc) {
  std::istringstream is(doc);
  return read_network(is);
}

}  // namespace stefan_kan
