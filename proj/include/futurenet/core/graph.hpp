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

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "futurenet/core/error.hpp"
#include "futurenet/core/tensor.hpp"

namespace futurenet {

/// Handle to a node on a Graph tape. Plain index; cheap to copy.
struct Var {
  std::int64_t id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode automatic differentiation over a tape of tensor nodes.
/// Every op records its value and a closure that scatters the output
/// gradient into its parents. backward() replays closures newest-first.
///
/// All tensors are rank-1 or rank-2; matrices are row-major. The tape is
/// single-use: build a forward pass, call backward once, read leaf grads.
template <typename T>
class Graph {
 public:
  using Mat =
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using CMat = Eigen::Map<
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  Graph() = default;
  Graph(const Graph &) = delete;
  Graph & operator=(const Graph &) = delete;

  std::int64_t size() const { return static_cast<std::int64_t>(nodes_.size()); }

  const Tensor<T> & value(Var v) const { return nodes_[check(v)].value; }
  Tensor<T> & grad(Var v) { return nodes_[check(v)].grad; }
  const Tensor<T> & grad(Var v) const { return nodes_[check(v)].grad; }

  /// Differentiable input. Gradients accumulate here.
  Var leaf(Tensor<T> value) { return make_node(std::move(value), {}); }

  /// Non-trainable input; participates in math, gradients are discarded.
  Var constant(Tensor<T> value) { return make_node(std::move(value), {}); }

  /// Generic op escape hatch used by the geometry ops: stores a value and a
  /// custom VJP closure invoked as vjp(graph, self_id).
  Var make_op(Tensor<T> value, std::function<void(Graph &, std::int64_t)> vjp) {
    return make_node(std::move(value), std::move(vjp));
  }

  // -- elementwise -----------------------------------------------------------

  Var add(Var a, Var b) {
    require_same(a, b, "add");
    Tensor<T> out = value(a);
    const Tensor<T> & vb = value(b);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data()[i] += vb.data()[i];
    return make_node(std::move(out), [a, b](Graph & g, std::int64_t self) {
      g.axpy(g.nodes_[self].grad, T(1), g.grad(a));
      g.axpy(g.nodes_[self].grad, T(1), g.grad(b));
    });
  }

  Var sub(Var a, Var b) {
    require_same(a, b, "sub");
    Tensor<T> out = value(a);
    const Tensor<T> & vb = value(b);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data()[i] -= vb.data()[i];
    return make_node(std::move(out), [a, b](Graph & g, std::int64_t self) {
      g.axpy(g.nodes_[self].grad, T(1), g.grad(a));
      g.axpy(g.nodes_[self].grad, T(-1), g.grad(b));
    });
  }

  Var mul(Var a, Var b) {
    require_same(a, b, "mul");
    Tensor<T> out = value(a);
    const Tensor<T> & vb = value(b);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data()[i] *= vb.data()[i];
    return make_node(std::move(out), [a, b](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      const Tensor<T> & va = g.value(a);
      const Tensor<T> & vb2 = g.value(b);
      Tensor<T> & ga = g.grad(a);
      Tensor<T> & gb = g.grad(b);
      for (std::int64_t i = 0; i < go.numel(); ++i) {
        ga.data()[i] += go.data()[i] * vb2.data()[i];
        gb.data()[i] += go.data()[i] * va.data()[i];
      }
    });
  }

  Var div(Var a, Var b) {
    require_same(a, b, "div");
    Tensor<T> out = value(a);
    const Tensor<T> & vb = value(b);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data()[i] /= vb.data()[i];
    return make_node(std::move(out), [a, b](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      const Tensor<T> & va = g.value(a);
      const Tensor<T> & vb2 = g.value(b);
      Tensor<T> & ga = g.grad(a);
      Tensor<T> & gb = g.grad(b);
      for (std::int64_t i = 0; i < go.numel(); ++i) {
        const T inv = T(1) / vb2.data()[i];
        ga.data()[i] += go.data()[i] * inv;
        gb.data()[i] -= go.data()[i] * va.data()[i] * inv * inv;
      }
    });
  }

  Var scale(Var a, double c) {
    Tensor<T> out = value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data()[i] *= static_cast<T>(c);
    return make_node(std::move(out), [a, c](Graph & g, std::int64_t self) {
      g.axpy(g.nodes_[self].grad, static_cast<T>(c), g.grad(a));
    });
  }

  Var add_scalar(Var a, double c) {
    Tensor<T> out = value(a);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data()[i] += static_cast<T>(c);
    return make_node(std::move(out), [a](Graph & g, std::int64_t self) {
      g.axpy(g.nodes_[self].grad, T(1), g.grad(a));
    });
  }

  // -- transcendental --------------------------------------------------------

  Var gelu(Var a) {
    // Exact (erf) form; smooth everywhere which keeps finite differences honest.
    const Tensor<T> & x = value(a);
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      const double xi = static_cast<double>(x.data()[i]);
      out.data()[i] = static_cast<T>(0.5 * xi * (1.0 + std::erf(xi / M_SQRT2)));
    }
    return make_node(std::move(out), [a](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      const Tensor<T> & x2 = g.value(a);
      Tensor<T> & ga = g.grad(a);
      constexpr double kInvSqrt2Pi = 0.3989422804014327;
      for (std::int64_t i = 0; i < go.numel(); ++i) {
        const double xi = static_cast<double>(x2.data()[i]);
        const double d = 0.5 * (1.0 + std::erf(xi / M_SQRT2)) +
                         xi * kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
        ga.data()[i] += go.data()[i] * static_cast<T>(d);
      }
    });
  }

  Var sigmoid(Var a) {
    const Tensor<T> & x = value(a);
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      const double xi = static_cast<double>(x.data()[i]);
      out.data()[i] = static_cast<T>(xi >= 0.0 ? 1.0 / (1.0 + std::exp(-xi))
                                               : std::exp(xi) / (1.0 + std::exp(xi)));
    }
    Tensor<T> saved = out;
    return make_node(
      std::move(out), [a, saved = std::move(saved)](Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        Tensor<T> & ga = g.grad(a);
        for (std::int64_t i = 0; i < go.numel(); ++i) {
          const T s = saved.data()[i];
          ga.data()[i] += go.data()[i] * s * (T(1) - s);
        }
      });
  }

  Var tanhv(Var a) {
    const Tensor<T> & x = value(a);
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      out.data()[i] = static_cast<T>(std::tanh(static_cast<double>(x.data()[i])));
    }
    Tensor<T> saved = out;
    return make_node(
      std::move(out), [a, saved = std::move(saved)](Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        Tensor<T> & ga = g.grad(a);
        for (std::int64_t i = 0; i < go.numel(); ++i) {
          const T t = saved.data()[i];
          ga.data()[i] += go.data()[i] * (T(1) - t * t);
        }
      });
  }

  Var softplus(Var a) {
    const Tensor<T> & x = value(a);
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      const double xi = static_cast<double>(x.data()[i]);
      out.data()[i] = static_cast<T>(
        xi > 30.0 ? xi : (xi < -30.0 ? std::exp(xi) : std::log1p(std::exp(xi))));
    }
    return make_node(std::move(out), [a](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      const Tensor<T> & x2 = g.value(a);
      Tensor<T> & ga = g.grad(a);
      for (std::int64_t i = 0; i < go.numel(); ++i) {
        const double xi = static_cast<double>(x2.data()[i]);
        const double s = xi >= 0.0 ? 1.0 / (1.0 + std::exp(-xi))
                                   : std::exp(xi) / (1.0 + std::exp(xi));
        ga.data()[i] += go.data()[i] * static_cast<T>(s);
      }
    });
  }

  Var expv(Var a) {
    const Tensor<T> & x = value(a);
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      out.data()[i] = static_cast<T>(std::exp(static_cast<double>(x.data()[i])));
    }
    Tensor<T> saved = out;
    return make_node(
      std::move(out), [a, saved = std::move(saved)](Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        Tensor<T> & ga = g.grad(a);
        for (std::int64_t i = 0; i < go.numel(); ++i) {
          ga.data()[i] += go.data()[i] * saved.data()[i];
        }
      });
  }

  Var logv(Var a) {
    const Tensor<T> & x = value(a);
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      out.data()[i] = static_cast<T>(std::log(static_cast<double>(x.data()[i])));
    }
    return make_node(std::move(out), [a](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      const Tensor<T> & x2 = g.value(a);
      Tensor<T> & ga = g.grad(a);
      for (std::int64_t i = 0; i < go.numel(); ++i) {
        ga.data()[i] += go.data()[i] / x2.data()[i];
      }
    });
  }

  Var absv(Var a) {
    const Tensor<T> & x = value(a);
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      out.data()[i] = std::abs(x.data()[i]);
    }
    return make_node(std::move(out), [a](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      const Tensor<T> & x2 = g.value(a);
      Tensor<T> & ga = g.grad(a);
      for (std::int64_t i = 0; i < go.numel(); ++i) {
        const T s = x2.data()[i] > T(0) ? T(1) : (x2.data()[i] < T(0) ? T(-1) : T(0));
        ga.data()[i] += go.data()[i] * s;
      }
    });
  }

  Var sqrtv(Var a) {
    const Tensor<T> & x = value(a);
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      out.data()[i] = static_cast<T>(std::sqrt(static_cast<double>(x.data()[i])));
    }
    Tensor<T> saved = out;
    return make_node(
      std::move(out), [a, saved = std::move(saved)](Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        Tensor<T> & ga = g.grad(a);
        for (std::int64_t i = 0; i < go.numel(); ++i) {
          ga.data()[i] += go.data()[i] / (T(2) * saved.data()[i]);
        }
      });
  }

  /// Clamp to [lo, hi]; gradient passes only strictly inside the interval.
  Var clampv(Var a, double lo, double hi) {
    const Tensor<T> & x = value(a);
    Tensor<T> out = x;
    for (std::int64_t i = 0; i < out.numel(); ++i) {
      out.data()[i] = std::min(static_cast<T>(hi), std::max(static_cast<T>(lo), x.data()[i]));
    }
    return make_node(std::move(out), [a, lo, hi](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      const Tensor<T> & x2 = g.value(a);
      Tensor<T> & ga = g.grad(a);
      for (std::int64_t i = 0; i < go.numel(); ++i) {
        const double xi = static_cast<double>(x2.data()[i]);
        if (xi > lo && xi < hi) ga.data()[i] += go.data()[i];
      }
    });
  }

  // -- dense linear algebra --------------------------------------------------

  Var matmul(Var a, Var b) {
    const Tensor<T> & va = value(a);
    const Tensor<T> & vb = value(b);
    if (va.rank() != 2 || vb.rank() != 2 || va.shape()[1] != vb.shape()[0]) {
      throw NumericError("matmul shape mismatch");
    }
    const std::int64_t m = va.shape()[0], k = va.shape()[1], n = vb.shape()[1];
    Tensor<T> out = Tensor<T>::zeros({m, n});
    Mat(out.data(), m, n).noalias() = CMat(va.data(), m, k) * CMat(vb.data(), k, n);
    return make_node(std::move(out), [a, b, m, k, n](Graph & g, std::int64_t self) {
      CMat go(g.nodes_[self].grad.data(), m, n);
      CMat va2(g.value(a).data(), m, k);
      CMat vb2(g.value(b).data(), k, n);
      Mat(g.grad(a).data(), m, k).noalias() += go * vb2.transpose();
      Mat(g.grad(b).data(), k, n).noalias() += va2.transpose() * go;
    });
  }

  /// y = x * w^T + bias, with w stored [out_dim, in_dim] and bias [out_dim].
  Var linear(Var x, Var w, Var bias) {
    const Tensor<T> & vx = value(x);
    const Tensor<T> & vw = value(w);
    const Tensor<T> & vb = value(bias);
    if (vx.rank() != 2 || vw.rank() != 2 || vx.shape()[1] != vw.shape()[1] ||
        vb.numel() != vw.shape()[0]) {
      throw NumericError("linear shape mismatch");
    }
    const std::int64_t n = vx.shape()[0], in = vx.shape()[1], out_d = vw.shape()[0];
    Tensor<T> out = Tensor<T>::zeros({n, out_d});
    Mat o(out.data(), n, out_d);
    o.noalias() = CMat(vx.data(), n, in) * CMat(vw.data(), out_d, in).transpose();
    o.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(vb.data(), out_d);
    return make_node(std::move(out), [x, w, bias, n, in, out_d](Graph & g, std::int64_t self) {
      CMat go(g.nodes_[self].grad.data(), n, out_d);
      CMat vx2(g.value(x).data(), n, in);
      CMat vw2(g.value(w).data(), out_d, in);
      Mat(g.grad(x).data(), n, in).noalias() += go * vw2;
      Mat(g.grad(w).data(), out_d, in).noalias() += go.transpose() * vx2;
      Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(g.grad(bias).data(), out_d) +=
        go.colwise().sum();
    });
  }

  /// Row-wise layer normalization with learned gain/shift over the last axis.
  Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5) {
    const Tensor<T> & vx = value(x);
    if (vx.rank() != 2) throw NumericError("layer_norm expects rank-2 input");
    const std::int64_t n = vx.shape()[0], d = vx.shape()[1];
    if (value(gamma).numel() != d || value(beta).numel() != d) {
      throw NumericError("layer_norm gain/shift dim mismatch");
    }
    Tensor<T> out = Tensor<T>::zeros({n, d});
    Tensor<T> xhat = Tensor<T>::zeros({n, d});
    Tensor<T> inv_sigma = Tensor<T>::zeros({n});
    const T * gm = value(gamma).data();
    const T * bt = value(beta).data();
    for (std::int64_t i = 0; i < n; ++i) {
      const T * row = vx.data() + i * d;
      double mu = 0.0;
      for (std::int64_t j = 0; j < d; ++j) mu += static_cast<double>(row[j]);
      mu /= static_cast<double>(d);
      double var = 0.0;
      for (std::int64_t j = 0; j < d; ++j) {
        const double c = static_cast<double>(row[j]) - mu;
        var += c * c;
      }
      var /= static_cast<double>(d);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_sigma.data()[i] = static_cast<T>(is);
      for (std::int64_t j = 0; j < d; ++j) {
        const T xh = static_cast<T>((static_cast<double>(row[j]) - mu) * is);
        xhat.data()[i * d + j] = xh;
        out.data()[i * d + j] = gm[j] * xh + bt[j];
      }
    }
    return make_node(
      std::move(out), [x, gamma, beta, n, d, xhat = std::move(xhat),
                       inv_sigma = std::move(inv_sigma)](Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        const T * gm = g.value(gamma).data();
        Tensor<T> & gx = g.grad(x);
        Tensor<T> & gg = g.grad(gamma);
        Tensor<T> & gb = g.grad(beta);
        for (std::int64_t i = 0; i < n; ++i) {
          const T * grow = go.data() + i * d;
          const T * xh = xhat.data() + i * d;
          double m1 = 0.0, m2 = 0.0;
          for (std::int64_t j = 0; j < d; ++j) {
            const double dxh = static_cast<double>(grow[j]) * static_cast<double>(gm[j]);
            m1 += dxh;
            m2 += dxh * static_cast<double>(xh[j]);
            gg.data()[j] += grow[j] * xh[j];
            gb.data()[j] += grow[j];
          }
          m1 /= static_cast<double>(d);
          m2 /= static_cast<double>(d);
          const double is = static_cast<double>(inv_sigma.data()[i]);
          for (std::int64_t j = 0; j < d; ++j) {
            const double dxh = static_cast<double>(grow[j]) * static_cast<double>(gm[j]);
            gx.data()[i * d + j] +=
              static_cast<T>(is * (dxh - m1 - static_cast<double>(xh[j]) * m2));
          }
        }
      });
  }

  // -- indexing and shaping --------------------------------------------------

  Var gather_rows(Var x, std::vector<std::int64_t> rows) {
    const Tensor<T> & vx = value(x);
    if (vx.rank() != 2) throw NumericError("gather_rows expects rank-2 input");
    const std::int64_t d = vx.shape()[1];
    Tensor<T> out = Tensor<T>::zeros({static_cast<std::int64_t>(rows.size()), d});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const T * src = vx.data() + rows[i] * d;
      std::copy(src, src + d, out.data() + static_cast<std::int64_t>(i) * d);
    }
    return make_node(
      std::move(out), [x, d, rows = std::move(rows)](Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        Tensor<T> & gx = g.grad(x);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const T * src = go.data() + static_cast<std::int64_t>(i) * d;
          T * dst = gx.data() + rows[i] * d;
          for (std::int64_t j = 0; j < d; ++j) dst[j] += src[j];
        }
      });
  }

  /// Scale each row by a fixed factor (used to freeze rows with no edges).
  Var row_mask(Var x, std::vector<double> mask) {
    const Tensor<T> & vx = value(x);
    if (vx.rank() != 2 || vx.shape()[0] != static_cast<std::int64_t>(mask.size())) {
      throw NumericError("row_mask shape mismatch");
    }
    const std::int64_t n = vx.shape()[0], d = vx.shape()[1];
    Tensor<T> out = vx;
    for (std::int64_t i = 0; i < n; ++i) {
      const T m = static_cast<T>(mask[static_cast<std::size_t>(i)]);
      for (std::int64_t j = 0; j < d; ++j) out.data()[i * d + j] *= m;
    }
    return make_node(
      std::move(out), [x, n, d, mask = std::move(mask)](Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        Tensor<T> & gx = g.grad(x);
        for (std::int64_t i = 0; i < n; ++i) {
          const T m = static_cast<T>(mask[static_cast<std::size_t>(i)]);
          for (std::int64_t j = 0; j < d; ++j) gx.data()[i * d + j] += go.data()[i * d + j] * m;
        }
      });
  }

  Var concat_rows(Var a, Var b) {
    const Tensor<T> & va = value(a);
    const Tensor<T> & vb = value(b);
    if (va.rank() != 2 || vb.rank() != 2 || va.shape()[1] != vb.shape()[1]) {
      throw NumericError("concat_rows column mismatch");
    }
    const std::int64_t na = va.shape()[0], nb = vb.shape()[0], d = va.shape()[1];
    Tensor<T> out = Tensor<T>::zeros({na + nb, d});
    std::copy(va.data(), va.data() + na * d, out.data());
    std::copy(vb.data(), vb.data() + nb * d, out.data() + na * d);
    return make_node(std::move(out), [a, b, na, nb, d](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      Tensor<T> & ga = g.grad(a);
      Tensor<T> & gb = g.grad(b);
      for (std::int64_t i = 0; i < na * d; ++i) ga.data()[i] += go.data()[i];
      for (std::int64_t i = 0; i < nb * d; ++i) gb.data()[i] += go.data()[na * d + i];
    });
  }

  Var slice_rows(Var x, std::int64_t r0, std::int64_t r1) {
    const Tensor<T> & vx = value(x);
    if (vx.rank() != 2 || r0 < 0 || r1 > vx.shape()[0] || r0 > r1) {
      throw NumericError("slice_rows range out of bounds");
    }
    const std::int64_t d = vx.shape()[1];
    Tensor<T> out = Tensor<T>::zeros({r1 - r0, d});
    std::copy(vx.data() + r0 * d, vx.data() + r1 * d, out.data());
    return make_node(std::move(out), [x, r0, r1, d](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      Tensor<T> & gx = g.grad(x);
      for (std::int64_t i = 0; i < (r1 - r0) * d; ++i) gx.data()[r0 * d + i] += go.data()[i];
    });
  }

  Var slice_cols(Var x, std::int64_t c0, std::int64_t c1) {
    const Tensor<T> & vx = value(x);
    if (vx.rank() != 2 || c0 < 0 || c1 > vx.shape()[1] || c0 > c1) {
      throw NumericError("slice_cols range out of bounds");
    }
    const std::int64_t n = vx.shape()[0], d = vx.shape()[1], w = c1 - c0;
    Tensor<T> out = Tensor<T>::zeros({n, w});
    for (std::int64_t i = 0; i < n; ++i) {
      std::copy(vx.data() + i * d + c0, vx.data() + i * d + c1, out.data() + i * w);
    }
    return make_node(std::move(out), [x, c0, n, d, w](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      Tensor<T> & gx = g.grad(x);
      for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < w; ++j) gx.data()[i * d + c0 + j] += go.data()[i * w + j];
      }
    });
  }

  Var concat_cols(Var a, Var b) {
    const Tensor<T> & va = value(a);
    const Tensor<T> & vb = value(b);
    if (va.rank() != 2 || vb.rank() != 2 || va.shape()[0] != vb.shape()[0]) {
      throw NumericError("concat_cols row mismatch");
    }
    const std::int64_t n = va.shape()[0], da = va.shape()[1], db = vb.shape()[1];
    Tensor<T> out = Tensor<T>::zeros({n, da + db});
    for (std::int64_t i = 0; i < n; ++i) {
      std::copy(va.data() + i * da, va.data() + (i + 1) * da, out.data() + i * (da + db));
      std::copy(vb.data() + i * db, vb.data() + (i + 1) * db, out.data() + i * (da + db) + da);
    }
    return make_node(std::move(out), [a, b, n, da, db](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      Tensor<T> & ga = g.grad(a);
      Tensor<T> & gb = g.grad(b);
      for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < da; ++j) {
          ga.data()[i * da + j] += go.data()[i * (da + db) + j];
        }
        for (std::int64_t j = 0; j < db; ++j) {
          gb.data()[i * db + j] += go.data()[i * (da + db) + da + j];
        }
      }
    });
  }

  /// Reinterpret the row-major buffer under a new shape of equal size.
  Var reshape(Var x, Shape shape) {
    const Tensor<T> & vx = value(x);
    Tensor<T> out = Tensor<T>::zeros(shape);
    if (out.numel() != vx.numel()) throw NumericError("reshape element count mismatch");
    std::copy(vx.data(), vx.data() + vx.numel(), out.data());
    return make_node(std::move(out), [x](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      Tensor<T> & gx = g.grad(x);
      for (std::int64_t i = 0; i < go.numel(); ++i) gx.data()[i] += go.data()[i];
    });
  }

  // -- attention primitives --------------------------------------------------

  /// Per-edge multi-head dot products: out[e,h] = <a[e,head h], b[e,head h]>
  /// scaled by 1/sqrt(head_dim).
  Var head_dot(Var a, Var b, std::int64_t n_heads) {
    require_same(a, b, "head_dot");
    const Tensor<T> & va = value(a);
    const std::int64_t e = va.shape()[0], d = va.shape()[1];
    if (d % n_heads != 0) throw NumericError("head_dot: dim not divisible by heads");
    const std::int64_t dh = d / n_heads;
    const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
    Tensor<T> out = Tensor<T>::zeros({e, n_heads});
    const Tensor<T> & vb = value(b);
    for (std::int64_t i = 0; i < e; ++i) {
      for (std::int64_t h = 0; h < n_heads; ++h) {
        T s = T(0);
        for (std::int64_t j = 0; j < dh; ++j) {
          s += va.data()[i * d + h * dh + j] * vb.data()[i * d + h * dh + j];
        }
        out.data()[i * n_heads + h] = s * inv;
      }
    }
    return make_node(std::move(out), [a, b, e, d, n_heads, dh, inv](Graph & g, std::int64_t self) {
      const Tensor<T> & go = g.nodes_[self].grad;
      const Tensor<T> & va2 = g.value(a);
      const Tensor<T> & vb2 = g.value(b);
      Tensor<T> & ga = g.grad(a);
      Tensor<T> & gb = g.grad(b);
      for (std::int64_t i = 0; i < e; ++i) {
        for (std::int64_t h = 0; h < n_heads; ++h) {
          const T gh = go.data()[i * n_heads + h] * inv;
          for (std::int64_t j = 0; j < dh; ++j) {
            ga.data()[i * d + h * dh + j] += gh * vb2.data()[i * d + h * dh + j];
            gb.data()[i * d + h * dh + j] += gh * va2.data()[i * d + h * dh + j];
          }
        }
      }
    });
  }

  /// Softmax over each query's edge segment, independently per head.
  /// offsets is the CSR boundary array (n_queries + 1 entries).
  Var segment_softmax(Var logits, std::vector<std::int64_t> offsets) {
    const Tensor<T> & vl = value(logits);
    const std::int64_t e = vl.shape()[0], h = vl.shape()[1];
    Tensor<T> out = vl;
    for (std::size_t q = 0; q + 1 < offsets.size(); ++q) {
      const std::int64_t lo = offsets[q], hi = offsets[q + 1];
      if (lo == hi) continue;
      for (std::int64_t c = 0; c < h; ++c) {
        double mx = -1e300;
        for (std::int64_t i = lo; i < hi; ++i) {
          mx = std::max(mx, static_cast<double>(vl.data()[i * h + c]));
        }
        double z = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) {
          const double ex = std::exp(static_cast<double>(vl.data()[i * h + c]) - mx);
          out.data()[i * h + c] = static_cast<T>(ex);
          z += ex;
        }
        for (std::int64_t i = lo; i < hi; ++i) {
          out.data()[i * h + c] = static_cast<T>(static_cast<double>(out.data()[i * h + c]) / z);
        }
      }
    }
    Tensor<T> saved = out;
    (void)e;
    return make_node(
      std::move(out),
      [logits, h, offsets = std::move(offsets), saved = std::move(saved)](
        Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        Tensor<T> & gl = g.grad(logits);
        for (std::size_t q = 0; q + 1 < offsets.size(); ++q) {
          const std::int64_t lo = offsets[q], hi = offsets[q + 1];
          if (lo == hi) continue;
          for (std::int64_t c = 0; c < h; ++c) {
            double dot = 0.0;
            for (std::int64_t i = lo; i < hi; ++i) {
              dot += static_cast<double>(saved.data()[i * h + c]) *
                     static_cast<double>(go.data()[i * h + c]);
            }
            for (std::int64_t i = lo; i < hi; ++i) {
              gl.data()[i * h + c] += static_cast<T>(
                static_cast<double>(saved.data()[i * h + c]) *
                (static_cast<double>(go.data()[i * h + c]) - dot));
            }
          }
        }
      });
  }

  /// Weighted pooling of per-edge values into query rows:
  /// out[q, head h dims] = sum over edges e of q of attn[e,h] * v[e, head h dims].
  Var attention_pool(Var attn, Var v, std::vector<std::int64_t> offsets, std::int64_t n_queries) {
    const Tensor<T> & va = value(attn);
    const Tensor<T> & vv = value(v);
    const std::int64_t h = va.shape()[1], d = vv.shape()[1];
    if (d % h != 0 || va.shape()[0] != vv.shape()[0]) {
      throw NumericError("attention_pool shape mismatch");
    }
    const std::int64_t dh = d / h;
    Tensor<T> out = Tensor<T>::zeros({n_queries, d});
    for (std::int64_t q = 0; q < n_queries; ++q) {
      for (std::int64_t i = offsets[static_cast<std::size_t>(q)];
           i < offsets[static_cast<std::size_t>(q) + 1]; ++i) {
        for (std::int64_t c = 0; c < h; ++c) {
          const T w = va.data()[i * h + c];
          for (std::int64_t j = 0; j < dh; ++j) {
            out.data()[q * d + c * dh + j] += w * vv.data()[i * d + c * dh + j];
          }
        }
      }
    }
    return make_node(
      std::move(out), [attn, v, h, d, dh, n_queries, offsets = std::move(offsets)](
                        Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        const Tensor<T> & va2 = g.value(attn);
        const Tensor<T> & vv2 = g.value(v);
        Tensor<T> & ga = g.grad(attn);
        Tensor<T> & gv = g.grad(v);
        for (std::int64_t q = 0; q < n_queries; ++q) {
          for (std::int64_t i = offsets[static_cast<std::size_t>(q)];
               i < offsets[static_cast<std::size_t>(q) + 1]; ++i) {
            for (std::int64_t c = 0; c < h; ++c) {
              T s = T(0);
              const T w = va2.data()[i * h + c];
              for (std::int64_t j = 0; j < dh; ++j) {
                const T gq = go.data()[q * d + c * dh + j];
                s += gq * vv2.data()[i * d + c * dh + j];
                gv.data()[i * d + c * dh + j] += w * gq;
              }
              ga.data()[i * h + c] += s;
            }
          }
        }
      });
  }

  // -- row-wise distributions ------------------------------------------------

  Var softmax_rows(Var x) {
    const Tensor<T> & vx = value(x);
    const std::int64_t n = vx.shape()[0], d = vx.shape()[1];
    Tensor<T> out = vx;
    for (std::int64_t i = 0; i < n; ++i) {
      double mx = -1e300;
      for (std::int64_t j = 0; j < d; ++j) {
        mx = std::max(mx, static_cast<double>(vx.data()[i * d + j]));
      }
      double z = 0.0;
      for (std::int64_t j = 0; j < d; ++j) {
        const double ex = std::exp(static_cast<double>(vx.data()[i * d + j]) - mx);
        out.data()[i * d + j] = static_cast<T>(ex);
        z += ex;
      }
      for (std::int64_t j = 0; j < d; ++j) {
        out.data()[i * d + j] = static_cast<T>(static_cast<double>(out.data()[i * d + j]) / z);
      }
    }
    Tensor<T> saved = out;
    return make_node(
      std::move(out),
      [x, n, d, saved = std::move(saved)](Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        Tensor<T> & gx = g.grad(x);
        for (std::int64_t i = 0; i < n; ++i) {
          double dot = 0.0;
          for (std::int64_t j = 0; j < d; ++j) {
            dot += static_cast<double>(saved.data()[i * d + j]) *
                   static_cast<double>(go.data()[i * d + j]);
          }
          for (std::int64_t j = 0; j < d; ++j) {
            gx.data()[i * d + j] += static_cast<T>(
              static_cast<double>(saved.data()[i * d + j]) *
              (static_cast<double>(go.data()[i * d + j]) - dot));
          }
        }
      });
  }

  Var log_softmax_rows(Var x) {
    const Tensor<T> & vx = value(x);
    const std::int64_t n = vx.shape()[0], d = vx.shape()[1];
    Tensor<T> out = vx;
    for (std::int64_t i = 0; i < n; ++i) {
      double mx = -1e300;
      for (std::int64_t j = 0; j < d; ++j) {
        mx = std::max(mx, static_cast<double>(vx.data()[i * d + j]));
      }
      double z = 0.0;
      for (std::int64_t j = 0; j < d; ++j) {
        z += std::exp(static_cast<double>(vx.data()[i * d + j]) - mx);
      }
      const double lse = mx + std::log(z);
      for (std::int64_t j = 0; j < d; ++j) {
        out.data()[i * d + j] = static_cast<T>(static_cast<double>(vx.data()[i * d + j]) - lse);
      }
    }
    Tensor<T> saved = out;
    return make_node(
      std::move(out),
      [x, n, d, saved = std::move(saved)](Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        Tensor<T> & gx = g.grad(x);
        for (std::int64_t i = 0; i < n; ++i) {
          double gsum = 0.0;
          for (std::int64_t j = 0; j < d; ++j) gsum += static_cast<double>(go.data()[i * d + j]);
          for (std::int64_t j = 0; j < d; ++j) {
            const double p = std::exp(static_cast<double>(saved.data()[i * d + j]));
            gx.data()[i * d + j] +=
              static_cast<T>(static_cast<double>(go.data()[i * d + j]) - p * gsum);
          }
        }
      });
  }

  /// Row-wise log(sum(exp(x))) -> [n, 1].
  Var logsumexp_rows(Var x) {
    const Tensor<T> & vx = value(x);
    const std::int64_t n = vx.shape()[0], d = vx.shape()[1];
    Tensor<T> out = Tensor<T>::zeros({n, 1});
    for (std::int64_t i = 0; i < n; ++i) {
      double mx = -1e300;
      for (std::int64_t j = 0; j < d; ++j) {
        mx = std::max(mx, static_cast<double>(vx.data()[i * d + j]));
      }
      double z = 0.0;
      for (std::int64_t j = 0; j < d; ++j) {
        z += std::exp(static_cast<double>(vx.data()[i * d + j]) - mx);
      }
      out.data()[i] = static_cast<T>(mx + std::log(z));
    }
    Tensor<T> saved = out;
    return make_node(
      std::move(out),
      [x, n, d, saved = std::move(saved)](Graph & g, std::int64_t self) {
        const Tensor<T> & go = g.nodes_[self].grad;
        const Tensor<T> & vx2 = g.value(x);
        Tensor<T> & gx = g.grad(x);
        for (std::int64_t i = 0; i < n; ++i) {
          for (std::int64_t j = 0; j < d; ++j) {
            const double p = std::exp(
              static_cast<double>(vx2.data()[i * d + j]) - static_cast<double>(saved.data()[i]));
            gx.data()[i * d + j] += static_cast<T>(p * static_cast<double>(go.data()[i]));
          }
        }
      });
  }

  // -- reductions ------------------------------------------------------------

  Var sum_all(Var x) {
    const Tensor<T> & vx = value(x);
    double s = 0.0;
    for (std::int64_t i = 0; i < vx.numel(); ++i) s += static_cast<double>(vx.data()[i]);
    Tensor<T> out = Tensor<T>::full({1, 1}, static_cast<T>(s));
    return make_node(std::move(out), [x](Graph & g, std::int64_t self) {
      const T gs = g.nodes_[self].grad.data()[0];
      Tensor<T> & gx = g.grad(x);
      for (std::int64_t i = 0; i < gx.numel(); ++i) gx.data()[i] += gs;
    });
  }

  Var mean_all(Var x) { return scale(sum_all(x), 1.0 / static_cast<double>(value(x).numel())); }

  /// Fixed-weight contraction sum(x * w) -> [1,1]. Weights are constants;
  /// this realizes masked means without growing the op set.
  Var dot_const(Var x, Tensor<double> w) {
    const Tensor<T> & vx = value(x);
    if (vx.numel() != w.numel()) throw NumericError("dot_const weight size mismatch");
    double s = 0.0;
    for (std::int64_t i = 0; i < vx.numel(); ++i) {
      s += static_cast<double>(vx.data()[i]) * w.data()[i];
    }
    Tensor<T> out = Tensor<T>::full({1, 1}, static_cast<T>(s));
    return make_node(std::move(out), [x, w = std::move(w)](Graph & g, std::int64_t self) {
      const T gs = g.nodes_[self].grad.data()[0];
      Tensor<T> & gx = g.grad(x);
      for (std::int64_t i = 0; i < gx.numel(); ++i) {
        gx.data()[i] += gs * static_cast<T>(w.data()[i]);
      }
    });
  }

  // -- engine ----------------------------------------------------------------

  /// Run reverse accumulation from a scalar output whose gradient seeds at 1.
  void backward(Var loss) {
    if (value(loss).numel() != 1) throw NumericError("backward expects a scalar output");
    for (auto & node : nodes_) node.grad.fill(T(0));
    nodes_[static_cast<std::size_t>(loss.id)].grad.data()[0] = T(1);
    for (std::int64_t i = static_cast<std::int64_t>(nodes_.size()) - 1; i >= 0; --i) {
      if (nodes_[static_cast<std::size_t>(i)].vjp) {
        nodes_[static_cast<std::size_t>(i)].vjp(*this, i);
      }
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    std::function<void(Graph &, std::int64_t)> vjp;
  };

  std::vector<Node> nodes_;

  std::int64_t check(Var v) const {
    if (v.id < 0 || v.id >= static_cast<std::int64_t>(nodes_.size())) {
      throw NumericError("dangling graph handle");
    }
    return v.id;
  }

  Var make_node(Tensor<T> value, std::function<void(Graph &, std::int64_t)> vjp) {
    Node node;
    node.grad = Tensor<T>::zeros(value.shape());
    node.value = std::move(value);
    node.vjp = std::move(vjp);
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::int64_t>(nodes_.size()) - 1};
  }

  static void axpy(const Tensor<T> & src, T alpha, Tensor<T> & dst) {
    for (std::int64_t i = 0; i < src.numel(); ++i) dst.data()[i] += alpha * src.data()[i];
  }

  void require_same(Var a, Var b, const char * what) const {
    if (!value(a).same_shape(value(b))) {
      throw NumericError(std::string(what) + ": operand shapes differ");
    }
  }
};

}  // namespace futurenet
