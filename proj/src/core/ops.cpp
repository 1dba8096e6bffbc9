#include "fgan/core/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fgan/core/error.hpp"

namespace fgan::ops {

namespace {

using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;
using VecMap = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, 1>>;
using CVecMap = Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, 1>>;

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeMismatch(std::string(op) + ": " + a.value().shape_string() + " vs " + b.value().shape_string());
}

void require_rank(const Var& x, int rank, const char* op) {
  if (x.value().rank() != rank)
    throw ShapeMismatch(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                        x.value().shape_string());
}

template <typename F>
Var unary(const Var& x, F f, std::function<void(Node&)> bw) {
  Tensor out(x.shape());
  const Real* s = x.value().data();
  Real* d = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) d[i] = f(s[i]);
  return make_node(std::move(out), {x}, std::move(bw));
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_node(std::move(out), {a, b}, [](Node& n) {
    accumulate_grad(n.parents[0], n.grad);
    accumulate_grad(n.parents[1], n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_node(std::move(out), {a, b}, [](Node& n) {
    accumulate_grad(n.parents[0], n.grad);
    if (n.parents[1].requires_grad()) {
      Tensor g = n.grad;
      for (auto& v : g.storage()) v = -v;
      accumulate_grad(n.parents[1], g);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_node(std::move(out), {a, b}, [](Node& n) {
    const Var& a = n.parents[0];
    const Var& b = n.parents[1];
    if (a.requires_grad()) {
      Tensor g(n.grad.shape());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * b.value()[i];
      accumulate_grad(a, g);
    }
    if (b.requires_grad()) {
      Tensor g(n.grad.shape());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * a.value()[i];
      accumulate_grad(b, g);
    }
  });
}

Var scale(const Var& a, Real s) {
  return unary(a, [s](Real v) { return v * s; }, [s](Node& n) {
    Tensor g = n.grad;
    for (auto& v : g.storage()) v *= s;
    accumulate_grad(n.parents[0], g);
  });
}

Var add_scalar(const Var& a, Real s) {
  return unary(a, [s](Real v) { return v + s; }, [](Node& n) { accumulate_grad(n.parents[0], n.grad); });
}

Var scale_by(const Var& x, const Var& s) {
  if (s.value().size() != 1) throw ShapeMismatch("scale_by: scalar factor expected");
  const Real k = s.value()[0];
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = k * x.value()[i];
  return make_node(std::move(out), {x, s}, [](Node& n) {
    const Var& x = n.parents[0];
    const Var& s = n.parents[1];
    if (x.requires_grad()) {
      Tensor g = n.grad;
      const Real k = s.value()[0];
      for (auto& v : g.storage()) v *= k;
      accumulate_grad(x, g);
    }
    if (s.requires_grad()) {
      Real acc = 0;
      for (std::size_t i = 0; i < n.grad.size(); ++i) acc += n.grad[i] * x.value()[i];
      accumulate_grad(s, Tensor::scalar(acc));
    }
  });
}

Var relu(const Var& x) {
  return unary(x, [](Real v) { return v > 0 ? v : Real{0}; }, [](Node& n) {
    const Tensor& xv = n.parents[0].value();
    Tensor g(n.grad.shape());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = xv[i] > 0 ? n.grad[i] : 0;
    accumulate_grad(n.parents[0], g);
  });
}

Var sigmoid(const Var& x) {
  return unary(x, [](Real v) {
    return v >= 0 ? 1 / (1 + std::exp(-v)) : std::exp(v) / (1 + std::exp(v));
  }, [](Node& n) {
    Tensor g(n.grad.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Real y = n.value[i];
      g[i] = n.grad[i] * y * (1 - y);
    }
    accumulate_grad(n.parents[0], g);
  });
}

Var tanh(const Var& x) {
  return unary(x, [](Real v) { return std::tanh(v); }, [](Node& n) {
    Tensor g(n.grad.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Real y = n.value[i];
      g[i] = n.grad[i] * (1 - y * y);
    }
    accumulate_grad(n.parents[0], g);
  });
}

Var detach(const Var& x) { return constant(x.value()); }

Var sum(const Var& x) {
  return make_node(Tensor::scalar(x.value().sum()), {x}, [](Node& n) {
    Tensor g(n.parents[0].shape(), n.grad[0]);
    accumulate_grad(n.parents[0], g);
  });
}

Var mean(const Var& x) {
  if (x.value().empty()) throw EmptyBatch("mean of an empty tensor");
  const Real inv = Real{1} / static_cast<Real>(x.value().size());
  return make_node(Tensor::scalar(x.value().sum() * inv), {x}, [inv](Node& n) {
    Tensor g(n.parents[0].shape(), n.grad[0] * inv);
    accumulate_grad(n.parents[0], g);
  });
}

namespace {
Var spatial_pool(const Var& x, bool average) {
  require_rank(x, 4, "global_pool");
  const int N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  const Real k = average ? Real{1} / HW : Real{1};
  Tensor out({N, C});
  const Real* s = x.value().data();
  for (int i = 0; i < N * C; ++i) {
    Real acc = 0;
    for (int j = 0; j < HW; ++j) acc += s[static_cast<std::size_t>(i) * HW + j];
    out[i] = acc * k;
  }
  return make_node(std::move(out), {x}, [N, C, HW, k](Node& n) {
    Tensor g(n.parents[0].shape());
    for (int i = 0; i < N * C; ++i)
      for (int j = 0; j < HW; ++j) g[static_cast<std::size_t>(i) * HW + j] = n.grad[i] * k;
    accumulate_grad(n.parents[0], g);
  });
}
}  // namespace

Var global_sum_pool(const Var& x) { return spatial_pool(x, false); }
Var global_avg_pool(const Var& x) { return spatial_pool(x, true); }

Var row_dot(const Var& a, const Var& b) {
  require_same_shape(a, b, "row_dot");
  require_rank(a, 2, "row_dot");
  const int N = a.dim(0), K = a.dim(1);
  Tensor out({N});
  for (int i = 0; i < N; ++i) {
    Real acc = 0;
    for (int j = 0; j < K; ++j) acc += a.value()[i * K + j] * b.value()[i * K + j];
    out[i] = acc;
  }
  return make_node(std::move(out), {a, b}, [N, K](Node& n) {
    const Var& a = n.parents[0];
    const Var& b = n.parents[1];
    Tensor ga(a.shape()), gb(b.shape());
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < K; ++j) {
        ga[i * K + j] = n.grad[i] * b.value()[i * K + j];
        gb[i * K + j] = n.grad[i] * a.value()[i * K + j];
      }
    accumulate_grad(a, ga);
    accumulate_grad(b, gb);
  });
}

Var reshape(const Var& x, std::vector<int> shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return make_node(std::move(out), {x}, [](Node& n) {
    accumulate_grad(n.parents[0], n.grad.reshaped(n.parents[0].shape()));
  });
}

Var concat1(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeMismatch("concat1 of nothing");
  if (xs.size() == 1) return xs[0];
  std::vector<int> shape = xs[0].shape();
  if (shape.size() < 2) throw ShapeMismatch("concat1 needs rank >= 2");
  const int outer = shape[0];
  std::size_t inner = 1;
  for (std::size_t d = 2; d < shape.size(); ++d) inner *= shape[d];
  int total = 0;
  std::vector<int> widths;
  for (const auto& x : xs) {
    const auto& s = x.shape();
    if (s.size() != shape.size() || s[0] != outer) throw ShapeMismatch("concat1: incompatible " + x.value().shape_string());
    for (std::size_t d = 2; d < s.size(); ++d)
      if (s[d] != shape[d]) throw ShapeMismatch("concat1: incompatible " + x.value().shape_string());
    widths.push_back(s[1]);
    total += s[1];
  }
  shape[1] = total;
  Tensor out(shape);
  int offset = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Real* s = xs[k].value().data();
    const std::size_t block = widths[k] * inner;
    for (int o = 0; o < outer; ++o)
      std::copy(s + o * block, s + (o + 1) * block, out.data() + (static_cast<std::size_t>(o) * total + offset) * inner);
    offset += widths[k];
  }
  return make_node(std::move(out), xs, [widths, outer, inner, total](Node& n) {
    int offset = 0;
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      const Var& p = n.parents[k];
      const std::size_t block = widths[k] * inner;
      if (p.requires_grad()) {
        Tensor g(p.shape());
        for (int o = 0; o < outer; ++o) {
          const Real* src = n.grad.data() + (static_cast<std::size_t>(o) * total + offset) * inner;
          std::copy(src, src + block, g.data() + o * block);
        }
        accumulate_grad(p, g);
      }
      offset += widths[k];
    }
  });
}

Var transpose12(const Var& x) {
  require_rank(x, 3, "transpose12");
  const int B = x.dim(0), M = x.dim(1), N = x.dim(2);
  Tensor out({B, N, M});
  for (int b = 0; b < B; ++b) {
    CMapR src(x.value().data() + static_cast<std::size_t>(b) * M * N, M, N);
    MapR dst(out.data() + static_cast<std::size_t>(b) * M * N, N, M);
    dst = src.transpose();
  }
  return make_node(std::move(out), {x}, [B, M, N](Node& n) {
    Tensor g({B, M, N});
    for (int b = 0; b < B; ++b) {
      CMapR src(n.grad.data() + static_cast<std::size_t>(b) * M * N, N, M);
      MapR dst(g.data() + static_cast<std::size_t>(b) * M * N, M, N);
      dst = src.transpose();
    }
    accumulate_grad(n.parents[0], g);
  });
}

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const int M = a.dim(0), K = a.dim(1), N = b.dim(1);
  if (b.dim(0) != K)
    throw ShapeMismatch("matmul: " + a.value().shape_string() + " x " + b.value().shape_string());
  Tensor out({M, N});
  MapR(out.data(), M, N).noalias() = CMapR(a.value().data(), M, K) * CMapR(b.value().data(), K, N);
  return make_node(std::move(out), {a, b}, [M, K, N](Node& n) {
    const Var& a = n.parents[0];
    const Var& b = n.parents[1];
    CMapR G(n.grad.data(), M, N);
    if (a.requires_grad()) {
      MapR ga(a.node()->grad_buffer().data(), M, K);
      ga.noalias() += G * CMapR(b.value().data(), K, N).transpose();
    }
    if (b.requires_grad()) {
      MapR gb(b.node()->grad_buffer().data(), K, N);
      gb.noalias() += CMapR(a.value().data(), M, K).transpose() * G;
    }
  });
}

Var bmm(const Var& a, const Var& b, bool trans_a, bool trans_b) {
  require_rank(a, 3, "bmm");
  require_rank(b, 3, "bmm");
  const int B = a.dim(0);
  if (b.dim(0) != B) throw ShapeMismatch("bmm: batch mismatch");
  const int ar = a.dim(1), ac = a.dim(2), br = b.dim(1), bc = b.dim(2);
  const int M = trans_a ? ac : ar, K = trans_a ? ar : ac;
  const int K2 = trans_b ? bc : br, N = trans_b ? br : bc;
  if (K != K2)
    throw ShapeMismatch("bmm: " + a.value().shape_string() + " x " + b.value().shape_string());
  Tensor out({B, M, N});
  for (int i = 0; i < B; ++i) {
    CMapR A(a.value().data() + static_cast<std::size_t>(i) * ar * ac, ar, ac);
    CMapR Bm(b.value().data() + static_cast<std::size_t>(i) * br * bc, br, bc);
    MapR C(out.data() + static_cast<std::size_t>(i) * M * N, M, N);
    if (!trans_a && !trans_b) C.noalias() = A * Bm;
    else if (trans_a && !trans_b) C.noalias() = A.transpose() * Bm;
    else if (!trans_a && trans_b) C.noalias() = A * Bm.transpose();
    else C.noalias() = A.transpose() * Bm.transpose();
  }
  return make_node(std::move(out), {a, b}, [=](Node& n) {
    const Var& a = n.parents[0];
    const Var& b = n.parents[1];
    for (int i = 0; i < B; ++i) {
      CMapR G(n.grad.data() + static_cast<std::size_t>(i) * M * N, M, N);
      CMapR A(a.value().data() + static_cast<std::size_t>(i) * ar * ac, ar, ac);
      CMapR Bm(b.value().data() + static_cast<std::size_t>(i) * br * bc, br, bc);
      if (a.requires_grad()) {
        MapR ga(a.node()->grad_buffer().data() + static_cast<std::size_t>(i) * ar * ac, ar, ac);
        // d op(A) = G op(B)^T
        if (!trans_a) {
          if (!trans_b) ga.noalias() += G * Bm.transpose();
          else ga.noalias() += G * Bm;
        } else {
          if (!trans_b) ga.noalias() += Bm * G.transpose();
          else ga.noalias() += Bm.transpose() * G.transpose();
        }
      }
      if (b.requires_grad()) {
        MapR gb(b.node()->grad_buffer().data() + static_cast<std::size_t>(i) * br * bc, br, bc);
        // d op(B) = op(A)^T G
        if (!trans_b) {
          if (!trans_a) gb.noalias() += A.transpose() * G;
          else gb.noalias() += A * G;
        } else {
          if (!trans_a) gb.noalias() += G.transpose() * A;
          else gb.noalias() += G.transpose() * A.transpose();
        }
      }
    }
  });
}

Var add_row_bias(const Var& x, const Var& b) {
  require_rank(x, 2, "add_row_bias");
  const int M = x.dim(0), N = x.dim(1);
  if (b.value().size() != static_cast<std::size_t>(N)) throw ShapeMismatch("add_row_bias: bias size");
  Tensor out = x.value();
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j) out[i * N + j] += b.value()[j];
  return make_node(std::move(out), {x, b}, [M, N](Node& n) {
    accumulate_grad(n.parents[0], n.grad);
    if (n.parents[1].requires_grad()) {
      Tensor g(n.parents[1].shape());
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) g[j] += n.grad[i * N + j];
      accumulate_grad(n.parents[1], g);
    }
  });
}

Var add_broadcast_mid(const Var& x, const Var& y) {
  require_rank(x, 3, "add_broadcast_mid");
  require_rank(y, 2, "add_broadcast_mid");
  const int B = x.dim(0), L = x.dim(1), A = x.dim(2);
  if (y.dim(0) != B || y.dim(1) != A) throw ShapeMismatch("add_broadcast_mid: " + y.value().shape_string());
  Tensor out = x.value();
  for (int b = 0; b < B; ++b)
    for (int l = 0; l < L; ++l)
      for (int a = 0; a < A; ++a) out[(static_cast<std::size_t>(b) * L + l) * A + a] += y.value()[b * A + a];
  return make_node(std::move(out), {x, y}, [B, L, A](Node& n) {
    accumulate_grad(n.parents[0], n.grad);
    if (n.parents[1].requires_grad()) {
      Tensor g({B, A});
      for (int b = 0; b < B; ++b)
        for (int l = 0; l < L; ++l)
          for (int a = 0; a < A; ++a) g[b * A + a] += n.grad[(static_cast<std::size_t>(b) * L + l) * A + a];
      accumulate_grad(n.parents[1], g);
    }
  });
}

namespace {

struct ConvShape {
  int C, H, W, O, kh, kw, stride, pad, Ho, Wo;
};

// Rows of `cols` are `ld` apart so several samples can share one column matrix.
void im2col(const Real* x, const ConvShape& s, Real* cols, std::size_t ld) {
  for (int c = 0; c < s.C; ++c)
    for (int i = 0; i < s.kh; ++i)
      for (int j = 0; j < s.kw; ++j) {
        Real* row = cols + static_cast<std::size_t>((c * s.kh + i) * s.kw + j) * ld;
        const Real* plane = x + static_cast<std::size_t>(c) * s.H * s.W;
        for (int oy = 0; oy < s.Ho; ++oy) {
          const int iy = oy * s.stride - s.pad + i;
          Real* dst = row + oy * s.Wo;
          if (iy < 0 || iy >= s.H) {
            std::fill(dst, dst + s.Wo, Real{0});
            continue;
          }
          const Real* src = plane + static_cast<std::size_t>(iy) * s.W;
          for (int ox = 0; ox < s.Wo; ++ox) {
            const int ix = ox * s.stride - s.pad + j;
            dst[ox] = (ix >= 0 && ix < s.W) ? src[ix] : Real{0};
          }
        }
      }
}

void col2im(const Real* cols, const ConvShape& s, Real* x, std::size_t ld) {
  for (int c = 0; c < s.C; ++c)
    for (int i = 0; i < s.kh; ++i)
      for (int j = 0; j < s.kw; ++j) {
        const Real* row = cols + static_cast<std::size_t>((c * s.kh + i) * s.kw + j) * ld;
        Real* plane = x + static_cast<std::size_t>(c) * s.H * s.W;
        for (int oy = 0; oy < s.Ho; ++oy) {
          const int iy = oy * s.stride - s.pad + i;
          if (iy < 0 || iy >= s.H) continue;
          Real* dst = plane + static_cast<std::size_t>(iy) * s.W;
          const Real* src = row + oy * s.Wo;
          for (int ox = 0; ox < s.Wo; ++ox) {
            const int ix = ox * s.stride - s.pad + j;
            if (ix >= 0 && ix < s.W) dst[ix] += src[ox];
          }
        }
      }
}

// Samples per GEMM: small feature maps are grouped so the matrix products stay wide, while
// the column buffer is kept under about 32 MB.
int conv_group(int N, int CKK, int HoWo) {
  constexpr std::size_t kMaxCols = std::size_t{1} << 22;
  const std::size_t per = static_cast<std::size_t>(CKK) * HoWo;
  return static_cast<int>(std::clamp<std::size_t>(kMaxCols / std::max<std::size_t>(per, 1), 1, N));
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var* bias, ConvGeometry geo) {
  require_rank(x, 4, "conv2d");
  require_rank(w, 4, "conv2d weight");
  ConvShape s{x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(3), geo.stride, geo.pad, 0, 0};
  if (w.dim(1) != s.C)
    throw ShapeMismatch("conv2d: input " + x.value().shape_string() + " vs weight " + w.value().shape_string());
  s.Ho = (s.H + 2 * s.pad - s.kh) / s.stride + 1;
  s.Wo = (s.W + 2 * s.pad - s.kw) / s.stride + 1;
  if (s.H + 2 * s.pad < s.kh || s.W + 2 * s.pad < s.kw || s.Ho < 1 || s.Wo < 1)
    throw ShapeMismatch("conv2d: input " + x.value().shape_string() + " too small for kernel");
  if (bias && bias->value().size() != static_cast<std::size_t>(s.O)) throw ShapeMismatch("conv2d: bias size");
  const int N = x.dim(0);
  const int CKK = s.C * s.kh * s.kw, HoWo = s.Ho * s.Wo;
  const std::size_t in_size = static_cast<std::size_t>(s.C) * s.H * s.W, out_size = static_cast<std::size_t>(s.O) * HoWo;
  const int group = conv_group(N, CKK, HoWo);

  Tensor out({N, s.O, s.Ho, s.Wo});
  CMapR Wm(w.value().data(), s.O, CKK);
  RealBuffer cols(static_cast<std::size_t>(CKK) * HoWo * group);
  RealBuffer prod(out_size * group);
  for (int n0 = 0; n0 < N; n0 += group) {
    const int g = std::min(group, N - n0);
    const std::size_t ld = static_cast<std::size_t>(g) * HoWo;
    for (int k = 0; k < g; ++k) im2col(x.value().data() + (n0 + k) * in_size, s, cols.data() + k * HoWo, ld);
    MapR P(prod.data(), s.O, static_cast<Eigen::Index>(ld));
    P.noalias() = Wm * CMapR(cols.data(), CKK, static_cast<Eigen::Index>(ld));
    for (int k = 0; k < g; ++k) {
      MapR On(out.data() + (n0 + k) * out_size, s.O, HoWo);
      On = P.middleCols(static_cast<Eigen::Index>(k) * HoWo, HoWo);
      if (bias)
        for (int o = 0; o < s.O; ++o) On.row(o).array() += bias->value()[o];
    }
  }

  std::vector<Var> parents{x, w};
  if (bias) parents.push_back(*bias);
  return make_node(std::move(out), std::move(parents), [s, N, CKK, HoWo, in_size, out_size, group](Node& n) {
    const Var& x = n.parents[0];
    const Var& w = n.parents[1];
    const bool has_bias = n.parents.size() > 2;
    CMapR Wm(w.value().data(), s.O, CKK);
    RealBuffer cols(static_cast<std::size_t>(CKK) * HoWo * group);
    RealBuffer grads(out_size * group);
    Real* gw = w.requires_grad() ? w.node()->grad_buffer().data() : nullptr;
    Real* gx = x.requires_grad() ? x.node()->grad_buffer().data() : nullptr;
    for (int n0 = 0; n0 < N; n0 += group) {
      const int g = std::min(group, N - n0);
      const auto ld = static_cast<Eigen::Index>(g) * HoWo;
      MapR G(grads.data(), s.O, ld);
      for (int k = 0; k < g; ++k)
        G.middleCols(static_cast<Eigen::Index>(k) * HoWo, HoWo) = CMapR(n.grad.data() + (n0 + k) * out_size, s.O, HoWo);
      if (gw) {
        for (int k = 0; k < g; ++k) im2col(x.value().data() + (n0 + k) * in_size, s, cols.data() + k * HoWo, ld);
        MapR(gw, s.O, CKK).noalias() += G * CMapR(cols.data(), CKK, ld).transpose();
      }
      if (gx) {
        MapR(cols.data(), CKK, ld).noalias() = Wm.transpose() * G;
        for (int k = 0; k < g; ++k) col2im(cols.data() + k * HoWo, s, gx + (n0 + k) * in_size, ld);
      }
      if (has_bias && n.parents[2].requires_grad()) {
        Real* gb = n.parents[2].node()->grad_buffer().data();
        for (int o = 0; o < s.O; ++o) gb[o] += G.row(o).sum();
      }
    }
  });
}

Var avg_pool2(const Var& x) {
  require_rank(x, 4, "avg_pool2");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = H / 2, Wo = W / 2;
  if (Ho < 1 || Wo < 1) throw ShapeMismatch("avg_pool2: input " + x.value().shape_string() + " too small");
  Tensor out({N, C, Ho, Wo});
  const Tensor& v = x.value();
  for (int p = 0; p < N * C; ++p) {
    const Real* src = v.data() + static_cast<std::size_t>(p) * H * W;
    Real* dst = out.data() + static_cast<std::size_t>(p) * Ho * Wo;
    for (int i = 0; i < Ho; ++i)
      for (int j = 0; j < Wo; ++j) {
        const Real* r0 = src + (2 * i) * W + 2 * j;
        const Real* r1 = r0 + W;
        dst[i * Wo + j] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
      }
  }
  return make_node(std::move(out), {x}, [N, C, H, W, Ho, Wo](Node& n) {
    Tensor g({N, C, H, W});
    for (int p = 0; p < N * C; ++p) {
      const Real* src = n.grad.data() + static_cast<std::size_t>(p) * Ho * Wo;
      Real* dst = g.data() + static_cast<std::size_t>(p) * H * W;
      for (int i = 0; i < Ho; ++i)
        for (int j = 0; j < Wo; ++j) {
          const Real q = 0.25 * src[i * Wo + j];
          Real* r0 = dst + (2 * i) * W + 2 * j;
          r0[0] += q;
          r0[1] += q;
          r0[W] += q;
          r0[W + 1] += q;
        }
    }
    accumulate_grad(n.parents[0], g);
  });
}

Var max_pool2(const Var& x) {
  require_rank(x, 4, "max_pool2");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Ho = H / 2, Wo = W / 2;
  if (Ho < 1 || Wo < 1) throw ShapeMismatch("max_pool2: input " + x.value().shape_string() + " too small");
  Tensor out({N, C, Ho, Wo});
  std::vector<std::size_t> arg(out.size());
  const Tensor& v = x.value();
  for (int p = 0; p < N * C; ++p) {
    const std::size_t base = static_cast<std::size_t>(p) * H * W;
    for (int i = 0; i < Ho; ++i)
      for (int j = 0; j < Wo; ++j) {
        std::size_t best = base + (2 * i) * W + 2 * j;
        for (std::size_t cand : {best + 1, best + W, best + W + 1})
          if (v[cand] > v[best]) best = cand;
        const std::size_t o = static_cast<std::size_t>(p) * Ho * Wo + i * Wo + j;
        out[o] = v[best];
        arg[o] = best;
      }
  }
  return make_node(std::move(out), {x}, [arg = std::move(arg)](Node& n) {
    Tensor g(n.parents[0].shape());
    for (std::size_t o = 0; o < arg.size(); ++o) g[arg[o]] += n.grad[o];
    accumulate_grad(n.parents[0], g);
  });
}

Var upsample_nearest2(const Var& x) {
  require_rank(x, 4, "upsample_nearest2");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor out({N, C, 2 * H, 2 * W});
  for (int p = 0; p < N * C; ++p) {
    const Real* src = x.value().data() + static_cast<std::size_t>(p) * H * W;
    Real* dst = out.data() + static_cast<std::size_t>(p) * 4 * H * W;
    for (int i = 0; i < 2 * H; ++i)
      for (int j = 0; j < 2 * W; ++j) dst[i * 2 * W + j] = src[(i / 2) * W + j / 2];
  }
  return make_node(std::move(out), {x}, [N, C, H, W](Node& n) {
    Tensor g({N, C, H, W});
    for (int p = 0; p < N * C; ++p) {
      const Real* src = n.grad.data() + static_cast<std::size_t>(p) * 4 * H * W;
      Real* dst = g.data() + static_cast<std::size_t>(p) * H * W;
      for (int i = 0; i < 2 * H; ++i)
        for (int j = 0; j < 2 * W; ++j) dst[(i / 2) * W + j / 2] += src[i * 2 * W + j];
    }
    accumulate_grad(n.parents[0], g);
  });
}

Var batch_norm(const Var& x, BatchNormState& state, bool training) {
  require_rank(x, 4, "batch_norm");
  const int N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (state.running_mean.size() != static_cast<std::size_t>(C))
    throw ShapeMismatch("batch_norm: state has " + std::to_string(state.running_mean.size()) + " channels, input " +
                        x.value().shape_string());
  const std::size_t M = static_cast<std::size_t>(N) * HW;
  const Tensor& v = x.value();
  std::vector<Real> mean(C), inv_std(C);
  if (training) {
    for (int c = 0; c < C; ++c) {
      Real s = 0;
      for (int n = 0; n < N; ++n) {
        const Real* p = v.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) s += p[i];
      }
      const Real mu = s / static_cast<Real>(M);
      Real ss = 0;
      for (int n = 0; n < N; ++n) {
        const Real* p = v.data() + (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const Real var = ss / static_cast<Real>(M);
      mean[c] = mu;
      inv_std[c] = 1 / std::sqrt(var + state.eps);
      const Real unbiased = M > 1 ? var * static_cast<Real>(M) / static_cast<Real>(M - 1) : var;
      state.running_mean[c] = (1 - state.momentum) * state.running_mean[c] + state.momentum * mu;
      state.running_var[c] = (1 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1 / std::sqrt(state.running_var[c] + state.eps);
    }
  }
  Tensor out(x.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
      for (int i = 0; i < HW; ++i) out[off + i] = (v[off + i] - mean[c]) * inv_std[c];
    }
  return make_node(std::move(out), {x}, [N, C, HW, M, training, inv_std = std::move(inv_std)](Node& n) {
    Tensor g(n.parents[0].shape());
    for (int c = 0; c < C; ++c) {
      Real mg = 0, mgx = 0;
      if (training) {
        for (int b = 0; b < N; ++b) {
          const std::size_t off = (static_cast<std::size_t>(b) * C + c) * HW;
          for (int i = 0; i < HW; ++i) {
            mg += n.grad[off + i];
            mgx += n.grad[off + i] * n.value[off + i];
          }
        }
        mg /= static_cast<Real>(M);
        mgx /= static_cast<Real>(M);
      }
      for (int b = 0; b < N; ++b) {
        const std::size_t off = (static_cast<std::size_t>(b) * C + c) * HW;
        for (int i = 0; i < HW; ++i)
          g[off + i] = inv_std[c] * (n.grad[off + i] - mg - n.value[off + i] * mgx);
      }
    }
    accumulate_grad(n.parents[0], g);
  });
}

Var channel_affine(const Var& x, const Var& gain, const Var& bias) {
  require_rank(x, 4, "channel_affine");
  const int N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  const bool per_sample = gain.value().rank() == 2;
  const std::size_t expect = per_sample ? static_cast<std::size_t>(N) * C : static_cast<std::size_t>(C);
  if (gain.value().size() != expect || bias.value().size() != expect)
    throw ShapeMismatch("channel_affine: gain " + gain.value().shape_string() + " for input " + x.value().shape_string());
  auto idx = [per_sample, C](int n, int c) { return per_sample ? static_cast<std::size_t>(n) * C + c : static_cast<std::size_t>(c); };
  Tensor out(x.shape());
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const Real gk = gain.value()[idx(n, c)], bk = bias.value()[idx(n, c)];
      const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
      for (int i = 0; i < HW; ++i) out[off + i] = x.value()[off + i] * gk + bk;
    }
  return make_node(std::move(out), {x, gain, bias}, [N, C, HW, idx](Node& n) {
    const Var& x = n.parents[0];
    const Var& gain = n.parents[1];
    const Var& bias = n.parents[2];
    Tensor gx(x.shape()), gg(gain.shape()), gbias(bias.shape());
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < C; ++c) {
        const Real gk = gain.value()[idx(b, c)];
        const std::size_t off = (static_cast<std::size_t>(b) * C + c) * HW;
        Real sg = 0, sgx = 0;
        for (int i = 0; i < HW; ++i) {
          const Real go = n.grad[off + i];
          gx[off + i] = go * gk;
          sg += go;
          sgx += go * x.value()[off + i];
        }
        gg[idx(b, c)] += sgx;
        gbias[idx(b, c)] += sg;
      }
    accumulate_grad(x, gx);
    accumulate_grad(gain, gg);
    accumulate_grad(bias, gbias);
  });
}

Var softmax_last(const Var& x) {
  const int D = x.dim(-1);
  const std::size_t rows = x.value().size() / D;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* s = x.value().data() + r * D;
    Real* d = out.data() + r * D;
    const Real m = *std::max_element(s, s + D);
    Real z = 0;
    for (int i = 0; i < D; ++i) z += (d[i] = std::exp(s[i] - m));
    for (int i = 0; i < D; ++i) d[i] /= z;
  }
  return make_node(std::move(out), {x}, [D, rows](Node& n) {
    Tensor g(n.value.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* y = n.value.data() + r * D;
      const Real* go = n.grad.data() + r * D;
      Real dot = 0;
      for (int i = 0; i < D; ++i) dot += go[i] * y[i];
      for (int i = 0; i < D; ++i) g[r * D + i] = y[i] * (go[i] - dot);
    }
    accumulate_grad(n.parents[0], g);
  });
}

Var log_softmax_last(const Var& x) {
  const int D = x.dim(-1);
  const std::size_t rows = x.value().size() / D;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* s = x.value().data() + r * D;
    Real* d = out.data() + r * D;
    const Real m = *std::max_element(s, s + D);
    Real z = 0;
    for (int i = 0; i < D; ++i) z += std::exp(s[i] - m);
    const Real lz = m + std::log(z);
    for (int i = 0; i < D; ++i) d[i] = s[i] - lz;
  }
  return make_node(std::move(out), {x}, [D, rows](Node& n) {
    Tensor g(n.value.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* y = n.value.data() + r * D;
      const Real* go = n.grad.data() + r * D;
      Real total = 0;
      for (int i = 0; i < D; ++i) total += go[i];
      for (int i = 0; i < D; ++i) g[r * D + i] = go[i] - std::exp(y[i]) * total;
    }
    accumulate_grad(n.parents[0], g);
  });
}

Var cross_entropy_sum(const Var& logits, const std::vector<int>& targets, int ignore_id) {
  require_rank(logits, 2, "cross_entropy_sum");
  const int R = logits.dim(0), V = logits.dim(1);
  if (targets.size() != static_cast<std::size_t>(R)) throw ShapeMismatch("cross_entropy_sum: target count");
  Tensor probs({R, V});
  Real loss = 0;
  for (int r = 0; r < R; ++r) {
    const Real* s = logits.value().data() + static_cast<std::size_t>(r) * V;
    Real* p = probs.data() + static_cast<std::size_t>(r) * V;
    const Real m = *std::max_element(s, s + V);
    Real z = 0;
    for (int i = 0; i < V; ++i) z += (p[i] = std::exp(s[i] - m));
    for (int i = 0; i < V; ++i) p[i] /= z;
    if (targets[r] == ignore_id) continue;
    if (targets[r] < 0 || targets[r] >= V) throw ShapeMismatch("cross_entropy_sum: target id out of range");
    loss -= s[targets[r]] - m - std::log(z);
  }
  return make_node(Tensor::scalar(loss), {logits},
                   [R, V, targets, ignore_id, probs = std::move(probs)](Node& n) {
                     Tensor g({R, V});
                     const Real up = n.grad[0];
                     for (int r = 0; r < R; ++r) {
                       if (targets[r] == ignore_id) continue;
                       for (int i = 0; i < V; ++i) g[r * V + i] = up * probs[r * V + i];
                       g[r * V + targets[r]] -= up;
                     }
                     accumulate_grad(n.parents[0], g);
                   });
}

Var embedding(const Var& table, const std::vector<int>& ids) {
  require_rank(table, 2, "embedding");
  const int V = table.dim(0), E = table.dim(1);
  const int R = static_cast<int>(ids.size());
  Tensor out({R, E});
  for (int r = 0; r < R; ++r) {
    if (ids[r] < 0 || ids[r] >= V) throw ShapeMismatch("embedding: id " + std::to_string(ids[r]) + " out of range");
    std::copy_n(table.value().data() + static_cast<std::size_t>(ids[r]) * E, E, out.data() + static_cast<std::size_t>(r) * E);
  }
  return make_node(std::move(out), {table}, [ids, E](Node& n) {
    if (!n.parents[0].requires_grad()) return;
    Real* g = n.parents[0].node()->grad_buffer().data();
    for (std::size_t r = 0; r < ids.size(); ++r)
      for (int e = 0; e < E; ++e) g[static_cast<std::size_t>(ids[r]) * E + e] += n.grad[r * E + e];
  });
}

Var spectral_normalize(const Var& w, Tensor& u, bool update) {
  const int rows = w.dim(0);
  const int cols = static_cast<int>(w.value().size() / rows);
  if (u.size() != static_cast<std::size_t>(rows)) throw ShapeMismatch("spectral_normalize: u size");
  CMapR W(w.value().data(), rows, cols);
  VecMap uv(u.data(), rows);
  Eigen::Matrix<Real, Eigen::Dynamic, 1> v = W.transpose() * uv;
  v /= std::max(v.norm(), Real{1e-12});
  if (update) {
    Eigen::Matrix<Real, Eigen::Dynamic, 1> nu = W * v;
    uv = nu / std::max(nu.norm(), Real{1e-12});
  }
  const Real sigma = std::max(Real(uv.dot(W * v)), Real{1e-12});
  Tensor out(w.shape());
  MapR(out.data(), rows, cols) = W / sigma;
  Tensor u_copy = u;
  RealBuffer vcopy(v.data(), v.data() + cols);
  return make_node(std::move(out), {w}, [rows, cols, sigma, u_copy, vcopy](Node& n) {
    CMapR G(n.grad.data(), rows, cols);
    CMapR Wsn(n.value.data(), rows, cols);
    const Real inner = (G.array() * Wsn.array()).sum();
    Tensor g(n.parents[0].shape());
    MapR gm(g.data(), rows, cols);
    CVecMap uu(u_copy.data(), rows);
    CVecMap vv(vcopy.data(), cols);
    gm = (G - inner * uu * vv.transpose()) / sigma;
    accumulate_grad(n.parents[0], g);
  });
}

}  // namespace fgan::ops
