#pragma once

#include "gale/common.hpp"
#include "gale/rng.hpp"
#include "gale/tensor.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace gale {

inline constexpr double kLayerNormEps = 1e-5;

// ── LayerNorm ────────────────────────────────────────────────────────────────

struct LayerNormParams {
  Vector gamma;
  Vector beta;

  static LayerNormParams identity(int d) {
    return LayerNormParams{Vector::Ones(d), Vector::Zero(d)};
  }
};

inline Matrix layer_norm(const Matrix& x, const LayerNormParams& p,
                         double eps = kLayerNormEps) {
  if (p.gamma.size() != x.cols() || p.beta.size() != x.cols())
    throw config_error(strf("layer norm over %d features got parameters of size %d",
                            static_cast<int>(x.cols()), static_cast<int>(p.gamma.size())));
  Matrix out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    double mean = x.row(i).mean();
    double var = (x.row(i).array() - mean).square().mean();
    out.row(i) = (((x.row(i).array() - mean) / std::sqrt(var + eps)) * p.gamma.transpose().array() +
                  p.beta.transpose().array())
                     .matrix();
  }
  return out;
}

// ── Position-wise feed-forward ───────────────────────────────────────────────

// y = ReLU(x W1^T + b1) W2^T + b2; also serves as the dimension-matching map
// from raw visual features to the text width.
struct FfnParams {
  Matrix w1;  // inner x in
  Vector b1;  // inner
  Matrix w2;  // out x inner
  Vector b2;  // out

  static FfnParams init(Rng& rng, int in, int inner, int out) {
    FfnParams p;
    p.w1 = uniform_fanin_matrix(rng, inner, in);
    p.b1 = uniform_fanin_vector(rng, inner, in);
    p.w2 = uniform_fanin_matrix(rng, out, inner);
    p.b2 = uniform_fanin_vector(rng, out, inner);
    return p;
  }

  static FfnParams zero(int in, int inner, int out) {
    FfnParams p;
    p.w1 = Matrix::Zero(inner, in);
    p.b1 = Vector::Zero(inner);
    p.w2 = Matrix::Zero(out, inner);
    p.b2 = Vector::Zero(out);
    return p;
  }
};

inline Matrix ffn_forward(const Matrix& x, const FfnParams& p) {
  if (x.cols() != p.w1.cols())
    throw config_error(strf("feed-forward expects %d input features, got %d",
                            static_cast<int>(p.w1.cols()), static_cast<int>(x.cols())));
  Matrix hidden = ((x * p.w1.transpose()).rowwise() + p.b1.transpose()).cwiseMax(0.0);
  return (hidden * p.w2.transpose()).rowwise() + p.b2.transpose();
}

inline Matrix project_visual(const Matrix& h_raw, const FfnParams& p) {
  return ffn_forward(h_raw, p);
}

// ── Edge-typed attribute attention ───────────────────────────────────────────

struct AttentionParams {
  Matrix w_q;  // d x d
  Matrix w_k;  // d x d
  Matrix w_v;  // d x d
  Matrix w_z;  // d x d_z, edge contribution to keys
  Matrix w_r;  // d x d_z, edge contribution to values

  static AttentionParams init(Rng& rng, int d, int d_z) {
    AttentionParams p;
    p.w_q = uniform_fanin_matrix(rng, d, d);
    p.w_k = uniform_fanin_matrix(rng, d, d);
    p.w_v = uniform_fanin_matrix(rng, d, d);
    p.w_z = uniform_fanin_matrix(rng, d, d_z);
    p.w_r = uniform_fanin_matrix(rng, d, d_z);
    return p;
  }
};

struct AttributeAttentionResult {
  Matrix states;   // n x d
  Matrix weights;  // n x n; exactly 0 where not adjacent, rows sum to 1
};

// Per query i, position j contributes key W_K X_j + W_z Z[i][j] and value
// W_V X_j + W_r Z[i][j]. Non-adjacent positions are masked additively with
// -inf so they receive exactly zero weight.
inline AttributeAttentionResult attribute_attention(const Matrix& x, const Tensor3& z,
                                                    const IntMatrix& a,
                                                    const AttentionParams& p) {
  int n = static_cast<int>(x.rows());
  int d = static_cast<int>(x.cols());
  if (z.rows() != n || z.cols() != n || a.rows() != n || a.cols() != n)
    throw config_error(strf("attention shapes disagree: X %dx%d, Z %dx%dx%d, A %dx%d", n, d,
                            z.rows(), z.cols(), z.depth(), static_cast<int>(a.rows()),
                            static_cast<int>(a.cols())));
  if (p.w_q.rows() != d || p.w_z.cols() != z.depth())
    throw config_error("attention parameter dimensions disagree with inputs");

  Matrix q = x * p.w_q.transpose();       // n x d
  Matrix k_base = x * p.w_k.transpose();  // n x d
  Matrix v_base = x * p.w_v.transpose();  // n x d
  // Edge terms for all (i, j) cells in two flat GEMMs: row i*n+j holds the
  // key/value contribution of Z[i][j].
  Matrix k_edge = z.flat() * p.w_z.transpose();  // (n*n) x d
  Matrix v_edge = z.flat() * p.w_r.transpose();

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double neg_inf = -std::numeric_limits<double>::infinity();
  AttributeAttentionResult out;
  out.states.resize(n, d);
  out.weights = Matrix::Zero(n, n);

  Vector logits(n);
  for (int i = 0; i < n; ++i) {
    auto k_edge_i = k_edge.middleRows(static_cast<Eigen::Index>(i) * n, n);  // n x d
    auto v_edge_i = v_edge.middleRows(static_cast<Eigen::Index>(i) * n, n);
    bool any = false;
    for (int j = 0; j < n; ++j) {
      if (a(i, j)) {
        logits(j) = scale * q.row(i).dot(k_base.row(j) + k_edge_i.row(j));
        any = true;
      } else {
        logits(j) = neg_inf;
      }
    }
    if (!any) throw config_error(strf("adjacency row %d admits no positions", i));
    double mx = logits.maxCoeff();
    double denom = 0.0;
    for (int j = 0; j < n; ++j) {
      if (a(i, j)) {
        out.weights(i, j) = std::exp(logits(j) - mx);
        denom += out.weights(i, j);
      }
    }
    out.weights.row(i) /= denom;
    out.states.row(i).setZero();
    for (int j = 0; j < n; ++j) {
      if (a(i, j))
        out.states.row(i) += out.weights(i, j) * (v_base.row(j) + v_edge_i.row(j));
    }
  }
  return out;
}

// ── Transformer block (post-norm residuals) ──────────────────────────────────

struct BlockParams {
  AttentionParams attn;
  FfnParams ffn;
  LayerNormParams ln_attn;
  LayerNormParams ln_ffn;

  static BlockParams init(Rng& rng, int d, int d_z, int ffn_inner) {
    BlockParams b;
    b.attn = AttentionParams::init(rng, d, d_z);
    b.ffn = FfnParams::init(rng, d, ffn_inner, d);
    b.ln_attn = LayerNormParams::identity(d);
    b.ln_ffn = LayerNormParams::identity(d);
    return b;
  }
};

inline Matrix transformer_block(const Matrix& x, const Tensor3& z, const IntMatrix& a,
                                const BlockParams& p) {
  Matrix h = layer_norm(x + attribute_attention(x, z, a, p.attn).states, p.ln_attn);
  return layer_norm(h + ffn_forward(h, p.ffn), p.ln_ffn);
}

// ── Cross-modal multihead attention ─────────────────────────────────────────

struct MultiheadParams {
  Matrix w_q;  // d x d
  Matrix w_k;
  Matrix w_v;
  Matrix w_o;  // d x d output projection
  Vector b_o;
  int heads = 8;

  static MultiheadParams init(Rng& rng, int d, int heads) {
    MultiheadParams p;
    p.w_q = uniform_fanin_matrix(rng, d, d);
    p.w_k = uniform_fanin_matrix(rng, d, d);
    p.w_v = uniform_fanin_matrix(rng, d, d);
    p.w_o = uniform_fanin_matrix(rng, d, d);
    p.b_o = Vector::Zero(d);
    p.heads = heads;
    return p;
  }
};

struct CrossModalResult {
  Matrix fused;                      // n x d: LayerNorm(H_T + multihead(H_T; H_I))
  std::vector<Matrix> head_weights;  // heads entries of n x k
};

inline CrossModalResult cross_modal_attention(const Matrix& h_t, const Matrix& h_i,
                                              const MultiheadParams& p,
                                              const LayerNormParams& ln) {
  int d = static_cast<int>(h_t.cols());
  if (h_i.cols() != d)
    throw config_error(strf("cross-modal attention requires matching widths, got %d and %d", d,
                            static_cast<int>(h_i.cols())));
  if (p.heads <= 0 || d % p.heads != 0)
    throw config_error(strf("head count %d must divide width %d", p.heads, d));
  int n = static_cast<int>(h_t.rows());
  int k = static_cast<int>(h_i.rows());
  int dh = d / p.heads;

  Matrix q = h_t * p.w_q.transpose();  // n x d
  Matrix kk = h_i * p.w_k.transpose();  // k x d
  Matrix vv = h_i * p.w_v.transpose();

  CrossModalResult out;
  out.head_weights.reserve(p.heads);
  Matrix concat(n, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int h = 0; h < p.heads; ++h) {
    auto qh = q.middleCols(h * dh, dh);
    auto kh = kk.middleCols(h * dh, dh);
    auto vh = vv.middleCols(h * dh, dh);
    Matrix logits = scale * (qh * kh.transpose());  // n x k
    Matrix w(n, k);
    for (int i = 0; i < n; ++i) {
      double mx = logits.row(i).maxCoeff();
      RowVector e = (logits.row(i).array() - mx).exp();
      w.row(i) = e / e.sum();
    }
    concat.middleCols(h * dh, dh) = w * vh;
    out.head_weights.push_back(std::move(w));
  }
  Matrix projected = (concat * p.w_o.transpose()).rowwise() + p.b_o.transpose();
  out.fused = layer_norm(h_t + projected, ln);
  return out;
}

}  // namespace gale
