#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dipriv/errors.hpp"
#include "dipriv/format.hpp"
#include "dipriv/lstm.hpp"

namespace dipriv {

// Network file format, version 1 (plain text, one value per token):
//
//   dipriv-net v1
//   head <linear|softmax> <out_dim>
//   layers <L>
//   layer <input_dim> <hidden_dim>     (repeated L times)
//   params <count>
//   <count doubles in flatten order>
//
// Doubles are written with just enough digits to round-trip exactly, so a
// save/load cycle is bit-preserving.

inline void save_net(std::ostream& os, const StackedNet& net) {
  os << "dipriv-net v1\n";
  os << "head " << (net.head_kind == HeadKind::linear ? "linear" : "softmax") << " "
     << net.output_dim() << "\n";
  os << "layers " << net.layers.size() << "\n";
  for (const auto& l : net.layers) os << "layer " << l.input_dim << " " << l.hidden_dim << "\n";
  const std::vector<double> flat = net.flatten();
  os << "params " << flat.size() << "\n";
  for (std::size_t i = 0; i < flat.size(); ++i)
    os << format_double(flat[i]) << ((i + 1) % 8 == 0 || i + 1 == flat.size() ? '\n' : ' ');
}

inline void save_net(const std::string& path, const StackedNet& net) {
  std::ofstream os(path);
  if (!os) throw DataError("save_net: cannot open " + path);
  save_net(os, net);
  if (!os) throw DataError("save_net: write failed for " + path);
}

namespace detail {

inline std::string next_token(std::istream& is, const std::string& what) {
  std::string tok;
  if (!(is >> tok)) throw DataError("net file: unexpected end while reading " + what);
  return tok;
}

inline void expect_token(std::istream& is, const std::string& expected) {
  const std::string tok = next_token(is, expected);
  if (tok != expected) throw DataError("net file: expected '" + expected + "', got '" + tok + "'");
}

inline std::size_t next_size(std::istream& is, const std::string& what) {
  std::size_t v{};
  if (!(is >> v)) throw DataError("net file: bad integer for " + what);
  return v;
}

}  // namespace detail

inline StackedNet load_net(std::istream& is) {
  detail::expect_token(is, "dipriv-net");
  detail::expect_token(is, "v1");
  detail::expect_token(is, "head");
  const std::string kind = detail::next_token(is, "head kind");
  if (kind != "linear" && kind != "softmax") throw DataError("net file: unknown head kind " + kind);
  const std::size_t out_dim = detail::next_size(is, "head out_dim");
  detail::expect_token(is, "layers");
  const std::size_t num_layers = detail::next_size(is, "layer count");
  if (num_layers == 0) throw DataError("net file: zero layers");

  StackedNet net;
  net.head_kind = kind == "linear" ? HeadKind::linear : HeadKind::softmax;
  net.layers.resize(num_layers);
  for (auto& l : net.layers) {
    detail::expect_token(is, "layer");
    l.input_dim = detail::next_size(is, "layer input_dim");
    l.hidden_dim = detail::next_size(is, "layer hidden_dim");
    for (std::size_t u = 0; u < kNumGates; ++u) {
      l.input_w[u] = Matrix(l.hidden_dim, l.input_dim);
      l.recur_w[u] = Matrix(l.hidden_dim, l.hidden_dim);
      l.bias[u] = Matrix(l.hidden_dim, 1);
    }
  }
  net.head_w = Matrix(out_dim, net.layers.back().hidden_dim);
  net.head_b = Matrix(out_dim, 1);

  detail::expect_token(is, "params");
  const std::size_t count = detail::next_size(is, "param count");
  if (count != net.param_count())
    throw DataError("net file: param count " + std::to_string(count) + " does not match shapes");
  std::vector<double> flat(count);
  for (auto& v : flat)
    if (!(is >> v)) throw DataError("net file: ran out of parameter values");
  net.unflatten(flat);
  return net;
}

inline StackedNet load_net(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("load_net: cannot open " + path);
  return load_net(is);
}

}  // namespace dipriv
