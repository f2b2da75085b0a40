#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "amodal/rng.hpp"

namespace amodal::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x * S(M_SQRT1_2)));
}

template <class S>
S gelu_grad(S x) {
  const S phi_cdf = S(0.5) * (S(1) + std::erf(x * S(M_SQRT1_2)));
  const S phi_pdf = std::exp(S(-0.5) * x * x) * S(0.3989422804014327);
  return phi_cdf + x * phi_pdf;
}

template <class S>
S sigmoid(S x) {
  if (x >= S(0)) {
    const S e = std::exp(-x);
    return S(1) / (S(1) + e);
  }
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template <class S>
void softmax_rows(Mat<S>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const S mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp();
    m.row(r) /= m.row(r).sum();
  }
}

// ---------------------------------------------------------------------------
// Layers. Each layer owns its parameters; a second instance of the same
// struct (zeroed) serves as the gradient accumulator. forward() fills a
// cache that backward() consumes, so independent samples can run in
// parallel with per-sample caches.
// ---------------------------------------------------------------------------

template <class S>
struct Linear {
  Mat<S> weight;  // in x out
  Mat<S> bias;    // 1 x out

  void init(int in, int out, Rng& rng) {
    const double std = 1.0 / std::sqrt(static_cast<double>(in));
    weight.resize(in, out);
    for (Eigen::Index i = 0; i < weight.size(); ++i) {
      weight.data()[i] = static_cast<S>(rng.normal(0.0, std));
    }
    bias = Mat<S>::Zero(1, out);
  }

  struct Cache {
    Mat<S> x;
  };

  Mat<S> forward(const Mat<S>& x, Cache& c) const {
    c.x = x;
    Mat<S> y = x * weight;
    y.rowwise() += bias.row(0);
    return y;
  }

  /// Accumulates parameter gradients into `grad` and returns dL/dx.
  Mat<S> backward(const Mat<S>& dy, const Cache& c, Linear& grad) const {
    grad.weight.noalias() += c.x.transpose() * dy;
    grad.bias.row(0) += dy.colwise().sum();
    return dy * weight.transpose();
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
    f(prefix + ".bias", bias);
  }
};

template <class S>
struct LayerNorm {
  Mat<S> gamma;  // 1 x d
  Mat<S> beta;   // 1 x d
  static constexpr S kEps = S(1e-5);

  void init(int d) {
    gamma = Mat<S>::Ones(1, d);
    beta = Mat<S>::Zero(1, d);
  }

  struct Cache {
    Mat<S> xhat;
    Vec<S> inv_std;
  };

  Mat<S> forward(const Mat<S>& x, Cache& c) const {
    const auto d = x.cols();
    c.xhat.resize(x.rows(), d);
    c.inv_std.resize(x.rows());
    Mat<S> y(x.rows(), d);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const S mu = x.row(r).mean();
      const auto centered = x.row(r).array() - mu;
      const S var = centered.square().mean();
      const S inv = S(1) / std::sqrt(var + kEps);
      c.inv_std(r) = inv;
      c.xhat.row(r) = centered * inv;
      y.row(r) =
          c.xhat.row(r).array() * gamma.row(0).array() + beta.row(0).array();
    }
    return y;
  }

  Mat<S> backward(const Mat<S>& dy, const Cache& c, LayerNorm& grad) const {
    const auto d = dy.cols();
    Mat<S> dx(dy.rows(), d);
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      const auto dyhat = dy.row(r).array() * gamma.row(0).array();
      const S mean_dyhat = dyhat.mean();
      const S mean_dyhat_xhat = (dyhat * c.xhat.row(r).array()).mean();
      dx.row(r) = c.inv_std(r) *
                  (dyhat - mean_dyhat - c.xhat.row(r).array() * mean_dyhat_xhat);
      grad.gamma.row(0).array() += dy.row(r).array() * c.xhat.row(r).array();
      grad.beta.row(0) += dy.row(r);
    }
    return dx;
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".gamma", gamma);
    f(prefix + ".beta", beta);
  }
};

template <class S>
struct Attention {
  int heads = 1;
  Linear<S> q, k, v, o;

  void init(int d, int n_heads, Rng& rng) {
    heads = n_heads;
    q.init(d, d, rng);
    k.init(d, d, rng);
    v.init(d, d, rng);
    o.init(d, d, rng);
  }

  struct Cache {
    typename Linear<S>::Cache qc, kc, vc, oc;
    Mat<S> Q, K, V;
    std::vector<Mat<S>> A;  // per-head attention weights
  };

  Mat<S> forward(const Mat<S>& xq, const Mat<S>& xkv, Cache& c) const {
    c.Q = q.forward(xq, c.qc);
    c.K = k.forward(xkv, c.kc);
    c.V = v.forward(xkv, c.vc);
    const auto d = c.Q.cols();
    const auto dh = d / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));
    c.A.resize(heads);
    Mat<S> concat(xq.rows(), d);
    for (int h = 0; h < heads; ++h) {
      Mat<S> scores = c.Q.middleCols(h * dh, dh) *
                      c.K.middleCols(h * dh, dh).transpose() * scale;
      softmax_rows(scores);
      concat.middleCols(h * dh, dh).noalias() =
          scores * c.V.middleCols(h * dh, dh);
      c.A[h] = std::move(scores);
    }
    return o.forward(concat, c.oc);
  }

  /// Adds dL/dxq and dL/dxkv into the provided accumulators (pass the
  /// same matrix twice for self-attention).
  void backward(const Mat<S>& dy, const Cache& c, Attention& grad, Mat<S>& dxq,
                Mat<S>& dxkv) const {
    const Mat<S> dconcat = o.backward(dy, c.oc, grad.o);
    const auto d = c.Q.cols();
    const auto dh = d / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));
    Mat<S> dQ = Mat<S>::Zero(c.Q.rows(), d);
    Mat<S> dK = Mat<S>::Zero(c.K.rows(), d);
    Mat<S> dV = Mat<S>::Zero(c.V.rows(), d);
    for (int h = 0; h < heads; ++h) {
      const auto& Ah = c.A[h];
      const auto dOh = dconcat.middleCols(h * dh, dh);
      dV.middleCols(h * dh, dh).noalias() = Ah.transpose() * dOh;
      Mat<S> dA = dOh * c.V.middleCols(h * dh, dh).transpose();
      const Vec<S> row_dot = (dA.array() * Ah.array()).rowwise().sum();
      Mat<S> dS = (Ah.array() * (dA.colwise() - row_dot).array()).matrix();
      dQ.middleCols(h * dh, dh).noalias() =
          dS * c.K.middleCols(h * dh, dh) * scale;
      dK.middleCols(h * dh, dh).noalias() =
          dS.transpose() * c.Q.middleCols(h * dh, dh) * scale;
    }
    dxq += q.backward(dQ, c.qc, grad.q);
    dxkv += k.backward(dK, c.kc, grad.k);
    dxkv += v.backward(dV, c.vc, grad.v);
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    q.visit(prefix + ".q", f);
    k.visit(prefix + ".k", f);
    v.visit(prefix + ".v", f);
    o.visit(prefix + ".o", f);
  }
};

template <class S>
struct Mlp {
  Linear<S> fc1, fc2;

  void init(int d_in, int d_hidden, int d_out, Rng& rng) {
    fc1.init(d_in, d_hidden, rng);
    fc2.init(d_hidden, d_out, rng);
  }

  struct Cache {
    typename Linear<S>::Cache c1, c2;
    Mat<S> pre;
  };

  Mat<S> forward(const Mat<S>& x, Cache& c) const {
    c.pre = fc1.forward(x, c.c1);
    const Mat<S> act = c.pre.unaryExpr([](S v) { return gelu(v); });
    return fc2.forward(act, c.c2);
  }

  Mat<S> backward(const Mat<S>& dy, const Cache& c, Mlp& grad) const {
    const Mat<S> dact = fc2.backward(dy, c.c2, grad.fc2);
    const Mat<S> dpre =
        dact.array() * c.pre.unaryExpr([](S v) { return gelu_grad(v); }).array();
    return fc1.backward(dpre, c.c1, grad.fc1);
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    fc1.visit(prefix + ".fc1", f);
    fc2.visit(prefix + ".fc2", f);
  }
};

/// Pre-norm transformer block: x += attn(ln1(x)); x += mlp(ln2(x)).
template <class S>
struct EncoderBlock {
  LayerNorm<S> ln1;
  Attention<S> attn;
  LayerNorm<S> ln2;
  Mlp<S> mlp;

  void init(int d, int heads, int mlp_ratio, Rng& rng) {
    ln1.init(d);
    attn.init(d, heads, rng);
    ln2.init(d);
    mlp.init(d, d * mlp_ratio, d, rng);
  }

  struct Cache {
    typename LayerNorm<S>::Cache ln1c, ln2c;
    typename Attention<S>::Cache attnc;
    typename Mlp<S>::Cache mlpc;
  };

  Mat<S> forward(const Mat<S>& x_in, Cache& c) const {
    Mat<S> x = x_in;
    const Mat<S> h1 = ln1.forward(x, c.ln1c);
    x += attn.forward(h1, h1, c.attnc);
    const Mat<S> h2 = ln2.forward(x, c.ln2c);
    x += mlp.forward(h2, c.mlpc);
    return x;
  }

  Mat<S> backward(const Mat<S>& dy, const Cache& c, EncoderBlock& grad) const {
    Mat<S> dx = dy;
    const Mat<S> dh2 = mlp.backward(dy, c.mlpc, grad.mlp);
    dx += ln2.backward(dh2, c.ln2c, grad.ln2);
    Mat<S> dh1 = Mat<S>::Zero(dy.rows(), dy.cols());
    attn.backward(dx, c.attnc, grad.attn, dh1, dh1);
    dx += ln1.backward(dh1, c.ln1c, grad.ln1);
    return dx;
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    ln1.visit(prefix + ".ln1", f);
    attn.visit(prefix + ".attn", f);
    ln2.visit(prefix + ".ln2", f);
    mlp.visit(prefix + ".mlp", f);
  }
};

/// Decoder block with dual cross-attention: the query tokens read the
/// image tokens, and the image tokens are updated from the queries so
/// the mask head sees prompt-conditioned features.
template <class S>
struct DecoderBlock {
  LayerNorm<S> ln_q1;
  Attention<S> self_attn;
  LayerNorm<S> ln_q2, ln_i2;
  Attention<S> cross_q2i;
  LayerNorm<S> ln_q3;
  Mlp<S> mlp;
  LayerNorm<S> ln_i4, ln_q4;
  Attention<S> cross_i2q;

  void init(int d, int heads, int mlp_ratio, Rng& rng) {
    ln_q1.init(d);
    self_attn.init(d, heads, rng);
    ln_q2.init(d);
    ln_i2.init(d);
    cross_q2i.init(d, heads, rng);
    ln_q3.init(d);
    mlp.init(d, d * mlp_ratio, d, rng);
    ln_i4.init(d);
    ln_q4.init(d);
    cross_i2q.init(d, heads, rng);
  }

  struct Cache {
    typename LayerNorm<S>::Cache q1c, q2c, i2c, q3c, i4c, q4c;
    typename Attention<S>::Cache selfc, q2ic, i2qc;
    typename Mlp<S>::Cache mlpc;
  };

  void forward(Mat<S>& queries, Mat<S>& image, Cache& c) const {
    const Mat<S> a = ln_q1.forward(queries, c.q1c);
    queries += self_attn.forward(a, a, c.selfc);
    const Mat<S> b = ln_q2.forward(queries, c.q2c);
    const Mat<S> i2 = ln_i2.forward(image, c.i2c);
    queries += cross_q2i.forward(b, i2, c.q2ic);
    const Mat<S> m = ln_q3.forward(queries, c.q3c);
    queries += mlp.forward(m, c.mlpc);
    const Mat<S> i4 = ln_i4.forward(image, c.i4c);
    const Mat<S> q4 = ln_q4.forward(queries, c.q4c);
    image += cross_i2q.forward(i4, q4, c.i2qc);
  }

  void backward(Mat<S>& dq, Mat<S>& dimg, const Cache& c,
                DecoderBlock& grad) const {
    // image update
    Mat<S> di4 = Mat<S>::Zero(dimg.rows(), dimg.cols());
    Mat<S> dq4 = Mat<S>::Zero(dq.rows(), dq.cols());
    cross_i2q.backward(dimg, c.i2qc, grad.cross_i2q, di4, dq4);
    dimg += ln_i4.backward(di4, c.i4c, grad.ln_i4);
    dq += ln_q4.backward(dq4, c.q4c, grad.ln_q4);
    // query mlp
    const Mat<S> dm = mlp.backward(dq, c.mlpc, grad.mlp);
    dq += ln_q3.backward(dm, c.q3c, grad.ln_q3);
    // cross attention queries -> image
    Mat<S> db = Mat<S>::Zero(dq.rows(), dq.cols());
    Mat<S> di2 = Mat<S>::Zero(dimg.rows(), dimg.cols());
    cross_q2i.backward(dq, c.q2ic, grad.cross_q2i, db, di2);
    dq += ln_q2.backward(db, c.q2c, grad.ln_q2);
    dimg += ln_i2.backward(di2, c.i2c, grad.ln_i2);
    // query self attention
    Mat<S> da = Mat<S>::Zero(dq.rows(), dq.cols());
    self_attn.backward(dq, c.selfc, grad.self_attn, da, da);
    dq += ln_q1.backward(da, c.q1c, grad.ln_q1);
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    ln_q1.visit(prefix + ".ln_q1", f);
    self_attn.visit(prefix + ".self_attn", f);
    ln_q2.visit(prefix + ".ln_q2", f);
    ln_i2.visit(prefix + ".ln_i2", f);
    cross_q2i.visit(prefix + ".cross_q2i", f);
    ln_q3.visit(prefix + ".ln_q3", f);
    mlp.visit(prefix + ".mlp", f);
    ln_i4.visit(prefix + ".ln_i4", f);
    ln_q4.visit(prefix + ".ln_q4", f);
    cross_i2q.visit(prefix + ".cross_i2q", f);
  }
};

}  // namespace amodal::nn
