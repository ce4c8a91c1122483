#include "vtc/graph.hpp"

#include <cmath>
#include <memory>

namespace vtc {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// rows/cols of the trailing matrix, treating [B,S,N] as B stacked [S,N]
int trailing_rows(const Tensor& t) {
  return t.ndim() == 3 ? t.dim(0) * t.dim(1) : t.dim(0);
}
}  // namespace

int Graph::push(Tensor v, std::function<void()> back) {
  Node n;
  n.grad = Tensor::zeros(v.shape);
  n.value = std::move(v);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Graph::leaf(Tensor v) { return push(std::move(v)); }

int Graph::add(int a, int b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  if (!same_shape(va, vb))
    throw ShapeError("add: shape mismatch " + shape_str(va.shape) + " vs " +
                     shape_str(vb.shape));
  Tensor out = va;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += vb.data[i];
  int id = push(std::move(out));
  nodes_[id].back = [this, id, a, b] {
    const Tensor& g = grad(id);
    Tensor& ga = grad_mut(a);
    Tensor& gb = grad_mut(b);
    for (size_t i = 0; i < g.data.size(); ++i) {
      ga.data[i] += g.data[i];
      gb.data[i] += g.data[i];
    }
  };
  return id;
}

int Graph::add_rowvec(int x, int b) {
  const Tensor& vx = val(x);
  const Tensor& vb = val(b);
  int n = vx.shape.back();
  if (vb.ndim() != 1 || vb.dim(0) != n)
    throw ShapeError("add_rowvec: bias " + shape_str(vb.shape) + " vs row width " +
                     std::to_string(n));
  Tensor out = vx;
  int rows = trailing_rows(vx);
  for (int r = 0; r < rows; ++r) {
    double* p = out.data.data() + static_cast<size_t>(r) * n;
    for (int j = 0; j < n; ++j) p[j] += vb.data[static_cast<size_t>(j)];
  }
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x, b, rows, n] {
    const Tensor& g = grad(id);
    Tensor& gx = grad_mut(x);
    Tensor& gb = grad_mut(b);
    for (size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
    for (int r = 0; r < rows; ++r) {
      const double* p = g.data.data() + static_cast<size_t>(r) * n;
      for (int j = 0; j < n; ++j) gb.data[static_cast<size_t>(j)] += p[j];
    }
  };
  return id;
}

int Graph::add_rowmat(int x, int m) {
  const Tensor& vx = val(x);
  const Tensor& vm = val(m);
  if (vx.ndim() != 3 || vm.ndim() != 2 || vx.dim(1) != vm.dim(0) ||
      vx.dim(2) != vm.dim(1))
    throw ShapeError("add_rowmat: " + shape_str(vx.shape) + " vs " +
                     shape_str(vm.shape));
  int bsz = vx.dim(0);
  int64_t per = vm.numel();
  Tensor out = vx;
  for (int b = 0; b < bsz; ++b) {
    double* p = out.data.data() + b * per;
    for (int64_t i = 0; i < per; ++i) p[i] += vm.data[static_cast<size_t>(i)];
  }
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x, m, bsz, per] {
    const Tensor& g = grad(id);
    Tensor& gx = grad_mut(x);
    Tensor& gm = grad_mut(m);
    for (size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
    for (int b = 0; b < bsz; ++b) {
      const double* p = g.data.data() + b * per;
      for (int64_t i = 0; i < per; ++i) gm.data[static_cast<size_t>(i)] += p[i];
    }
  };
  return id;
}

int Graph::scale(int x, double c) {
  Tensor out = val(x);
  for (double& v : out.data) v *= c;
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x, c] {
    const Tensor& g = grad(id);
    Tensor& gx = grad_mut(x);
    for (size_t i = 0; i < g.data.size(); ++i) gx.data[i] += c * g.data[i];
  };
  return id;
}

int Graph::scale_by_exp(int x, int s) {
  const Tensor& vs = val(s);
  if (vs.numel() != 1) throw ShapeError("scale_by_exp: scale must be scalar");
  double e = std::exp(vs.data[0]);
  Tensor out = val(x);
  for (double& v : out.data) v *= e;
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x, s, e] {
    const Tensor& g = grad(id);
    const Tensor& vx = val(x);
    Tensor& gx = grad_mut(x);
    Tensor& gs = grad_mut(s);
    double acc = 0.0;
    for (size_t i = 0; i < g.data.size(); ++i) {
      gx.data[i] += e * g.data[i];
      acc += g.data[i] * vx.data[i];
    }
    gs.data[0] += e * acc;
  };
  return id;
}

int Graph::matmul(int a, int b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  if (va.ndim() != 2 || vb.ndim() != 2 || va.dim(1) != vb.dim(0))
    throw ShapeError("matmul: " + shape_str(va.shape) + " x " + shape_str(vb.shape));
  int m = va.dim(0), k = va.dim(1), n = vb.dim(1);
  Tensor out({m, n});
  gemm(va.data.data(), vb.data.data(), out.data.data(), m, k, n);
  int id = push(std::move(out));
  nodes_[id].back = [this, id, a, b, m, k, n] {
    const Tensor& g = grad(id);
    // dA += dC * B^T ; dB += A^T * dC
    gemm_nt(g.data.data(), val(b).data.data(), grad_mut(a).data.data(), m, n, k, true);
    gemm_tn(val(a).data.data(), g.data.data(), grad_mut(b).data.data(), k, m, n, true);
  };
  return id;
}

int Graph::matmul_nt(int a, int b) {
  const Tensor& va = val(a);
  const Tensor& vb = val(b);
  if (va.ndim() != 2 || vb.ndim() != 2 || va.dim(1) != vb.dim(1))
    throw ShapeError("matmul_nt: " + shape_str(va.shape) + " x " + shape_str(vb.shape) +
                     "^T");
  int m = va.dim(0), k = va.dim(1), n = vb.dim(0);
  Tensor out({m, n});
  gemm_nt(va.data.data(), vb.data.data(), out.data.data(), m, k, n);
  int id = push(std::move(out));
  nodes_[id].back = [this, id, a, b, m, k, n] {
    const Tensor& g = grad(id);
    // C = A B^T: dA += dC * B ; dB += dC^T * A
    gemm(g.data.data(), val(b).data.data(), grad_mut(a).data.data(), m, n, k, true);
    gemm_tn(g.data.data(), val(a).data.data(), grad_mut(b).data.data(), n, m, k, true);
  };
  return id;
}

int Graph::linear(int x, int w, int b) {
  const Tensor& vx = val(x);
  const Tensor& vw = val(w);
  if (vw.ndim() != 2 || vx.shape.back() != vw.dim(0))
    throw ShapeError("linear: input " + shape_str(vx.shape) + " vs weight " +
                     shape_str(vw.shape));
  int k = vw.dim(0), n = vw.dim(1);
  int rows = trailing_rows(vx);
  std::vector<int> out_shape = vx.shape;
  out_shape.back() = n;
  Tensor out(out_shape);
  gemm(vx.data.data(), vw.data.data(), out.data.data(), rows, k, n);
  if (b >= 0) {
    const Tensor& vb = val(b);
    if (vb.ndim() != 1 || vb.dim(0) != n)
      throw ShapeError("linear: bias " + shape_str(vb.shape));
    for (int r = 0; r < rows; ++r) {
      double* p = out.data.data() + static_cast<size_t>(r) * n;
      for (int j = 0; j < n; ++j) p[j] += vb.data[static_cast<size_t>(j)];
    }
  }
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x, w, b, rows, k, n] {
    const Tensor& g = grad(id);
    gemm_nt(g.data.data(), val(w).data.data(), grad_mut(x).data.data(), rows, n, k,
            true);
    gemm_tn(val(x).data.data(), g.data.data(), grad_mut(w).data.data(), k, rows, n,
            true);
    if (b >= 0) {
      Tensor& gb = grad_mut(b);
      for (int r = 0; r < rows; ++r) {
        const double* p = g.data.data() + static_cast<size_t>(r) * n;
        for (int j = 0; j < n; ++j) gb.data[static_cast<size_t>(j)] += p[j];
      }
    }
  };
  return id;
}

int Graph::layer_norm(int x, int gain, int bias, double eps) {
  const Tensor& vx = val(x);
  int n = vx.shape.back();
  const Tensor& vg = val(gain);
  const Tensor& vb = val(bias);
  if (vg.ndim() != 1 || vg.dim(0) != n || vb.ndim() != 1 || vb.dim(0) != n)
    throw ShapeError("layer_norm: gain/bias must be [" + std::to_string(n) + "]");
  int rows = trailing_rows(vx);
  Tensor out(vx.shape);
  auto xhat = std::make_shared<std::vector<double>>(vx.data.size());
  auto inv_sigma = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    const double* p = vx.data.data() + static_cast<size_t>(r) * n;
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += p[j];
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      double d = p[j] - mu;
      var += d * d;
    }
    var /= n;
    double is = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[static_cast<size_t>(r)] = is;
    double* o = out.data.data() + static_cast<size_t>(r) * n;
    double* xh = xhat->data() + static_cast<size_t>(r) * n;
    for (int j = 0; j < n; ++j) {
      xh[j] = (p[j] - mu) * is;
      o[j] = vg.data[static_cast<size_t>(j)] * xh[j] + vb.data[static_cast<size_t>(j)];
    }
  }
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x, gain, bias, rows, n, xhat, inv_sigma] {
    const Tensor& g = grad(id);
    const Tensor& vg = val(gain);
    Tensor& gx = grad_mut(x);
    Tensor& gg = grad_mut(gain);
    Tensor& gb = grad_mut(bias);
    for (int r = 0; r < rows; ++r) {
      const double* gy = g.data.data() + static_cast<size_t>(r) * n;
      const double* xh = xhat->data() + static_cast<size_t>(r) * n;
      double is = (*inv_sigma)[static_cast<size_t>(r)];
      double mean_h = 0.0, mean_hx = 0.0;
      for (int j = 0; j < n; ++j) {
        double h = vg.data[static_cast<size_t>(j)] * gy[j];
        mean_h += h;
        mean_hx += h * xh[j];
      }
      mean_h /= n;
      mean_hx /= n;
      double* gxr = gx.data.data() + static_cast<size_t>(r) * n;
      for (int j = 0; j < n; ++j) {
        double h = vg.data[static_cast<size_t>(j)] * gy[j];
        gxr[j] += is * (h - mean_h - xh[j] * mean_hx);
        gg.data[static_cast<size_t>(j)] += gy[j] * xh[j];
        gb.data[static_cast<size_t>(j)] += gy[j];
      }
    }
  };
  return id;
}

int Graph::gelu(int x) {
  const Tensor& vx = val(x);
  Tensor out(vx.shape);
  for (size_t i = 0; i < vx.data.size(); ++i) {
    double v = vx.data[i];
    out.data[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x] {
    const Tensor& g = grad(id);
    const Tensor& vx = val(x);
    Tensor& gx = grad_mut(x);
    for (size_t i = 0; i < g.data.size(); ++i) {
      double v = vx.data[i];
      double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      gx.data[i] += g.data[i] * (cdf + v * pdf);
    }
  };
  return id;
}

int Graph::l2norm_rows(int x) {
  const Tensor& vx = val(x);
  if (vx.ndim() != 2) throw ShapeError("l2norm_rows: expected rank-2 input");
  int rows = vx.dim(0), n = vx.dim(1);
  Tensor out(vx.shape);
  auto norms = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    const double* p = vx.row_ptr(r);
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += p[j] * p[j];
    double nn = std::sqrt(s);
    if (nn == 0.0) throw ZeroNorm("l2norm_rows: zero-norm row " + std::to_string(r));
    (*norms)[static_cast<size_t>(r)] = nn;
    double* o = out.row_ptr(r);
    for (int j = 0; j < n; ++j) o[j] = p[j] / nn;
  }
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x, rows, n, norms] {
    const Tensor& g = grad(id);
    const Tensor& vx = val(x);
    Tensor& gx = grad_mut(x);
    for (int r = 0; r < rows; ++r) {
      const double* gy = g.row_ptr(r);
      const double* p = vx.row_ptr(r);
      double nn = (*norms)[static_cast<size_t>(r)];
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += gy[j] * p[j];
      double* gxr = gx.data.data() + static_cast<size_t>(r) * n;
      double inv = 1.0 / nn, inv3 = dot / (nn * nn * nn);
      for (int j = 0; j < n; ++j) gxr[j] += gy[j] * inv - p[j] * inv3;
    }
  };
  return id;
}

int Graph::attention(int x, int heads, int wq, int bq, int wk, int bk, int wv, int bv,
                     int wo, int bo, bool causal) {
  const Tensor& vx = val(x);
  if (vx.ndim() != 3) throw ShapeError("attention: expected [B,S,D] input");
  int bsz = vx.dim(0), s = vx.dim(1), d = vx.dim(2);
  if (d % heads != 0) throw ShapeError("attention: width not divisible by head count");
  int dh = d / heads;
  double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  int q = linear(x, wq, bq);
  int k = linear(x, wk, bk);
  int v = linear(x, wv, bv);

  const Tensor& vq = val(q);
  const Tensor& vk = val(k);
  const Tensor& vv = val(v);
  size_t n_attn = static_cast<size_t>(bsz) * heads * s * s;
  auto probs = std::make_shared<std::vector<double>>(n_attn);
  Tensor ctx({bsz, s, d});

  auto head_off = [s, d, dh](const Tensor& t, int b, int h) {
    return t.data.data() + (static_cast<size_t>(b) * s) * d + h * dh;
  };
  for (int b = 0; b < bsz; ++b) {
    for (int h = 0; h < heads; ++h) {
      const double* qp = head_off(vq, b, h);
      const double* kp = head_off(vk, b, h);
      const double* vp = head_off(vv, b, h);
      double* ap = probs->data() +
                   ((static_cast<size_t>(b) * heads + h) * s) * s;
      for (int i = 0; i < s; ++i) {
        const double* qi = qp + static_cast<size_t>(i) * d;
        double* row = ap + static_cast<size_t>(i) * s;
        int lim = causal ? i + 1 : s;
        double mx = -1e300;
        for (int j = 0; j < lim; ++j) {
          const double* kj = kp + static_cast<size_t>(j) * d;
          double dot = 0.0;
          for (int c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          row[j] = dot * inv_sqrt_dh;
          if (row[j] > mx) mx = row[j];
        }
        double z = 0.0;
        for (int j = 0; j < lim; ++j) {
          row[j] = std::exp(row[j] - mx);
          z += row[j];
        }
        for (int j = 0; j < lim; ++j) row[j] /= z;
        for (int j = lim; j < s; ++j) row[j] = 0.0;
        double* out = ctx.data.data() + (static_cast<size_t>(b) * s + i) * d + h * dh;
        for (int c = 0; c < dh; ++c) out[c] = 0.0;
        for (int j = 0; j < lim; ++j) {
          const double* vj = vp + static_cast<size_t>(j) * d;
          double a = row[j];
          for (int c = 0; c < dh; ++c) out[c] += a * vj[c];
        }
      }
    }
  }

  int ctx_id = push(std::move(ctx));
  nodes_[ctx_id].back = [this, ctx_id, q, k, v, bsz, heads, s, d, dh, causal,
                         inv_sqrt_dh, probs, head_off] {
    const Tensor& g = grad(ctx_id);
    const Tensor& vq = val(q);
    const Tensor& vk = val(k);
    const Tensor& vv = val(v);
    Tensor& gq = grad_mut(q);
    Tensor& gk = grad_mut(k);
    Tensor& gv = grad_mut(v);
    std::vector<double> da(static_cast<size_t>(s) * s);
    for (int b = 0; b < bsz; ++b) {
      for (int h = 0; h < heads; ++h) {
        const double* qp = head_off(vq, b, h);
        const double* kp = head_off(vk, b, h);
        const double* vp = head_off(vv, b, h);
        double* gqp = gq.data.data() + (static_cast<size_t>(b) * s) * d + h * dh;
        double* gkp = gk.data.data() + (static_cast<size_t>(b) * s) * d + h * dh;
        double* gvp = gv.data.data() + (static_cast<size_t>(b) * s) * d + h * dh;
        const double* ap = probs->data() +
                           ((static_cast<size_t>(b) * heads + h) * s) * s;
        for (int i = 0; i < s; ++i) {
          const double* go = g.data.data() +
                             (static_cast<size_t>(b) * s + i) * d + h * dh;
          const double* arow = ap + static_cast<size_t>(i) * s;
          double* darow = da.data() + static_cast<size_t>(i) * s;
          int lim = causal ? i + 1 : s;
          // dV += A^T dO ; dA = dO V^T
          for (int j = 0; j < lim; ++j) {
            const double* vj = vp + static_cast<size_t>(j) * d;
            double* gvj = gvp + static_cast<size_t>(j) * d;
            double a = arow[j];
            double dot = 0.0;
            for (int c = 0; c < dh; ++c) {
              gvj[c] += a * go[c];
              dot += go[c] * vj[c];
            }
            darow[j] = dot;
          }
          // softmax backward: dS_ij = A_ij (dA_ij - sum_k dA_ik A_ik)
          double mix = 0.0;
          for (int j = 0; j < lim; ++j) mix += darow[j] * arow[j];
          const double* qi = qp + static_cast<size_t>(i) * d;
          double* gqi = gqp + static_cast<size_t>(i) * d;
          for (int j = 0; j < lim; ++j) {
            double ds = arow[j] * (darow[j] - mix) * inv_sqrt_dh;
            const double* kj = kp + static_cast<size_t>(j) * d;
            double* gkj = gkp + static_cast<size_t>(j) * d;
            for (int c = 0; c < dh; ++c) {
              gqi[c] += ds * kj[c];
              gkj[c] += ds * qi[c];
            }
          }
        }
      }
    }
  };
  return linear(ctx_id, wo, bo);
}

int Graph::prepend_rows(int x, int p) {
  const Tensor& vx = val(x);
  const Tensor& vp = val(p);
  if (vx.ndim() != 3 || vp.ndim() != 2 || vp.dim(1) != vx.dim(2))
    throw ShapeError("prepend_rows: " + shape_str(vx.shape) + " with " +
                     shape_str(vp.shape));
  int bsz = vx.dim(0), s = vx.dim(1), d = vx.dim(2), np = vp.dim(0);
  Tensor out({bsz, np + s, d});
  for (int b = 0; b < bsz; ++b) {
    double* dst = out.mat_ptr(b);
    std::copy(vp.data.begin(), vp.data.end(), dst);
    const double* src = vx.mat_ptr(b);
    std::copy(src, src + static_cast<size_t>(s) * d, dst + static_cast<size_t>(np) * d);
  }
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x, p, bsz, s, d, np] {
    const Tensor& g = grad(id);
    Tensor& gx = grad_mut(x);
    Tensor& gp = grad_mut(p);
    for (int b = 0; b < bsz; ++b) {
      const double* gb = g.mat_ptr(b);
      for (int64_t i = 0; i < static_cast<int64_t>(np) * d; ++i)
        gp.data[static_cast<size_t>(i)] += gb[i];
      double* gxb = gx.mat_ptr(b);
      const double* tail = gb + static_cast<size_t>(np) * d;
      for (int64_t i = 0; i < static_cast<int64_t>(s) * d; ++i) gxb[i] += tail[i];
    }
  };
  return id;
}

int Graph::replace_front_rows(int x, int p) {
  const Tensor& vx = val(x);
  const Tensor& vp = val(p);
  if (vx.ndim() != 3 || vp.ndim() != 2 || vp.dim(1) != vx.dim(2) ||
      vp.dim(0) > vx.dim(1))
    throw ShapeError("replace_front_rows: " + shape_str(vx.shape) + " with " +
                     shape_str(vp.shape));
  int bsz = vx.dim(0), d = vx.dim(2), np = vp.dim(0);
  Tensor out = vx;
  for (int b = 0; b < bsz; ++b)
    std::copy(vp.data.begin(), vp.data.end(), out.mat_ptr(b));
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x, p, bsz, d, np] {
    const Tensor& g = grad(id);
    Tensor& gx = grad_mut(x);
    Tensor& gp = grad_mut(p);
    int64_t head = static_cast<int64_t>(np) * d;
    int64_t per = static_cast<int64_t>(g.dim(1)) * d;
    for (int b = 0; b < bsz; ++b) {
      const double* gb = g.mat_ptr(b);
      for (int64_t i = 0; i < head; ++i) gp.data[static_cast<size_t>(i)] += gb[i];
      double* gxb = gx.mat_ptr(b);
      for (int64_t i = head; i < per; ++i) gxb[i] += gb[i];
    }
  };
  return id;
}

int Graph::gather_rows(int table, const std::vector<int>& ids) {
  const Tensor& vt = val(table);
  if (vt.ndim() != 2) throw ShapeError("gather_rows: table must be rank 2");
  int v = vt.dim(0), d = vt.dim(1);
  for (int i : ids)
    if (i < 0 || i >= v)
      throw ShapeError("gather_rows: id " + std::to_string(i) + " out of range");
  Tensor out({static_cast<int>(ids.size()), d});
  for (size_t r = 0; r < ids.size(); ++r)
    std::copy(vt.row_ptr(ids[r]), vt.row_ptr(ids[r]) + d, out.row_ptr(static_cast<int>(r)));
  int id = push(std::move(out));
  auto idx = std::make_shared<std::vector<int>>(ids);
  nodes_[id].back = [this, id, table, d, idx] {
    const Tensor& g = grad(id);
    Tensor& gt = grad_mut(table);
    for (size_t r = 0; r < idx->size(); ++r) {
      const double* gr = g.row_ptr(static_cast<int>(r));
      double* tr = gt.row_ptr((*idx)[r]);
      for (int j = 0; j < d; ++j) tr[j] += gr[j];
    }
  };
  return id;
}

int Graph::select_row(int x, int row) {
  const Tensor& vx = val(x);
  if (vx.ndim() != 3 || row < 0 || row >= vx.dim(1))
    throw ShapeError("select_row: row " + std::to_string(row) + " from " +
                     shape_str(vx.shape));
  std::vector<int> rows(static_cast<size_t>(vx.dim(0)), row);
  return select_rows(x, rows);
}

int Graph::select_rows(int x, const std::vector<int>& rows) {
  const Tensor& vx = val(x);
  if (vx.ndim() != 3 || static_cast<int>(rows.size()) != vx.dim(0))
    throw ShapeError("select_rows: need one row index per batch item");
  int s = vx.dim(1), d = vx.dim(2);
  for (int r : rows)
    if (r < 0 || r >= s) throw ShapeError("select_rows: index out of range");
  Tensor out({vx.dim(0), d});
  for (size_t b = 0; b < rows.size(); ++b) {
    const double* src = vx.mat_ptr(static_cast<int>(b)) +
                        static_cast<size_t>(rows[b]) * d;
    std::copy(src, src + d, out.row_ptr(static_cast<int>(b)));
  }
  int id = push(std::move(out));
  auto idx = std::make_shared<std::vector<int>>(rows);
  nodes_[id].back = [this, id, x, d, idx] {
    const Tensor& g = grad(id);
    Tensor& gx = grad_mut(x);
    for (size_t b = 0; b < idx->size(); ++b) {
      const double* gr = g.row_ptr(static_cast<int>(b));
      double* dst = gx.mat_ptr(static_cast<int>(b)) +
                    static_cast<size_t>((*idx)[b]) * d;
      for (int j = 0; j < d; ++j) dst[j] += gr[j];
    }
  };
  return id;
}

int Graph::reshape(int x, std::vector<int> shape) {
  const Tensor& vx = val(x);
  Tensor out(shape);
  if (out.numel() != vx.numel())
    throw ShapeError("reshape: element count mismatch " + shape_str(vx.shape) +
                     " -> " + shape_str(shape));
  out.data = vx.data;
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x] {
    const Tensor& g = grad(id);
    Tensor& gx = grad_mut(x);
    for (size_t i = 0; i < g.data.size(); ++i) gx.data[i] += g.data[i];
  };
  return id;
}

int Graph::mean_group_rows(int x, int group) {
  const Tensor& vx = val(x);
  if (vx.ndim() != 2 || group <= 0 || vx.dim(0) % group != 0)
    throw ShapeError("mean_group_rows: " + shape_str(vx.shape) + " by " +
                     std::to_string(group));
  int out_rows = vx.dim(0) / group, n = vx.dim(1);
  Tensor out({out_rows, n});
  for (int r = 0; r < out_rows; ++r) {
    double* o = out.row_ptr(r);
    for (int t = 0; t < group; ++t) {
      const double* p = vx.row_ptr(r * group + t);
      for (int j = 0; j < n; ++j) o[j] += p[j];
    }
    for (int j = 0; j < n; ++j) o[j] /= group;
  }
  int id = push(std::move(out));
  nodes_[id].back = [this, id, x, out_rows, group, n] {
    const Tensor& g = grad(id);
    Tensor& gx = grad_mut(x);
    for (int r = 0; r < out_rows; ++r) {
      const double* gr = g.row_ptr(r);
      for (int t = 0; t < group; ++t) {
        double* dst = gx.data.data() + static_cast<size_t>(r * group + t) * n;
        for (int j = 0; j < n; ++j) dst[j] += gr[j] / group;
      }
    }
  };
  return id;
}

int Graph::ce_mean(int logits, const std::vector<int>& targets) {
  const Tensor& vl = val(logits);
  if (vl.ndim() != 2 || static_cast<int>(targets.size()) != vl.dim(0))
    throw ShapeError("ce_mean: logits " + shape_str(vl.shape) + " vs " +
                     std::to_string(targets.size()) + " targets");
  int bsz = vl.dim(0), n = vl.dim(1);
  for (int t : targets)
    if (t < 0 || t >= n) throw ShapeError("ce_mean: target out of range");
  auto soft = std::make_shared<std::vector<double>>(vl.data.size());
  double total = 0.0;
  for (int r = 0; r < bsz; ++r) {
    const double* p = vl.row_ptr(r);
    double mx = p[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, p[j]);
    double z = 0.0;
    double* sr = soft->data() + static_cast<size_t>(r) * n;
    for (int j = 0; j < n; ++j) {
      sr[j] = std::exp(p[j] - mx);
      z += sr[j];
    }
    for (int j = 0; j < n; ++j) sr[j] /= z;
    total -= p[static_cast<size_t>(targets[static_cast<size_t>(r)])] - mx - std::log(z);
  }
  Tensor out({1});
  out.data[0] = total / bsz;
  int id = push(std::move(out));
  auto tgt = std::make_shared<std::vector<int>>(targets);
  nodes_[id].back = [this, id, logits, bsz, n, soft, tgt] {
    double g = grad(id).data[0];
    Tensor& gl = grad_mut(logits);
    double inv = g / bsz;
    for (int r = 0; r < bsz; ++r) {
      const double* sr = soft->data() + static_cast<size_t>(r) * n;
      double* gr = gl.row_ptr(r);
      for (int j = 0; j < n; ++j) gr[j] += inv * sr[j];
      gr[(*tgt)[static_cast<size_t>(r)]] -= inv;
    }
  };
  return id;
}

void Graph::backward(int id) {
  if (val(id).numel() != 1)
    throw ShapeError("backward: root must be scalar, got " + shape_str(val(id).shape));
  grad_mut(id).data[0] = 1.0;
  for (int i = id; i >= 0; --i)
    if (nodes_[static_cast<size_t>(i)].back) nodes_[static_cast<size_t>(i)].back();
}

}  // namespace vtc
