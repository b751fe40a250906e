// Copyright 2026 The FutureNet-LOF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

#include "futurenet/core/graph.hpp"
#include "futurenet/core/params.hpp"

namespace futurenet {

// Small composable layers. Each register_* adds the named tensors to a
// ParamStore; the matching apply_* builds the computation on a graph.

inline void register_linear(ParamStore & ps, const std::string & name, std::int64_t in,
                            std::int64_t out) {
  ps.add(name + ".w", {out, in}, InitKind::kFanInUniform);
  ps.add(name + ".b", {out}, InitKind::kZeros);
}

template <typename T>
Var apply_linear(Graph<T> & g, const BoundParams & p, const std::string & name, Var x) {
  return g.linear(x, p(name + ".w"), p(name + ".b"));
}

inline void register_layer_norm(ParamStore & ps, const std::string & name, std::int64_t d) {
  ps.add(name + ".gamma", {d}, InitKind::kOnes);
  ps.add(name + ".beta", {d}, InitKind::kZeros);
}

template <typename T>
Var apply_layer_norm(Graph<T> & g, const BoundParams & p, const std::string & name, Var x) {
  return g.layer_norm(x, p(name + ".gamma"), p(name + ".beta"));
}

/// Two-layer perceptron with smooth GELU activation.
inline void register_mlp2(ParamStore & ps, const std::string & name, std::int64_t in,
                          std::int64_t hidden, std::int64_t out) {
  register_linear(ps, name + ".0", in, hidden);
  register_linear(ps, name + ".1", hidden, out);
}

template <typename T>
Var apply_mlp2(Graph<T> & g, const BoundParams & p, const std::string & name, Var x) {
  return apply_linear(g, p, name + ".1", g.gelu(apply_linear(g, p, name + ".0", x)));
}

/// Gated recurrent unit cell. Update rule:
///   z = sigmoid(Wxz x + h Whz + bz)
///   r = sigmoid(Wxr x + h Whr + br)
///   c = tanh(Wxc x + r * (h Whc) + bc)
///   h' = (1 - z) * c + z * h
/// Input weights are stored [d, in]; hidden weights [d, d] act by right
/// multiplication so the hidden path needs no separate bias.
inline void register_gru(ParamStore & ps, const std::string & name, std::int64_t in,
                         std::int64_t d) {
  for (const char * gate : {"z", "r", "c"}) {
    ps.add(name + ".wx" + gate, {d, in}, InitKind::kFanInUniform);
    ps.add(name + ".wh" + gate, {d, d}, InitKind::kFanInUniform);
    ps.add(name + ".b" + gate, {d}, InitKind::kZeros);
  }
}

template <typename T>
Var apply_gru_cell(Graph<T> & g, const BoundParams & p, const std::string & name, Var x, Var h) {
  const auto gate = [&](const std::string & which) {
    return g.add(
      g.linear(x, p(name + ".wx" + which), p(name + ".b" + which)),
      g.matmul(h, p(name + ".wh" + which)));
  };
  Var z = g.sigmoid(gate("z"));
  Var r = g.sigmoid(gate("r"));
  Var c = g.tanhv(g.add(
    g.linear(x, p(name + ".wxc"), p(name + ".bc")),
    g.mul(r, g.matmul(h, p(name + ".whc")))));
  Var one_minus_z = g.add_scalar(g.scale(z, -1.0), 1.0);
  return g.add(g.mul(one_minus_z, c), g.mul(z, h));
}

}  // namespace futurenet
