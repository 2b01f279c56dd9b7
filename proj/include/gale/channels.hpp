#pragma once

#include "gale/common.hpp"
#include "gale/graph.hpp"
#include "gale/rng.hpp"
#include "gale/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace gale {

inline constexpr int kSdCap = 32;  // hop distances clamp here before embedding
inline constexpr int kCoCap = 16;  // co-occurrence values live in [-1, kCoCap]

// ── Pos channel ──────────────────────────────────────────────────────────────

// R(i, j) = sum of the POS vectors of tokens min(i,j) .. max(i,j) inclusive,
// so the tensor is symmetric by construction.
inline Tensor3 build_pos_channel(const TokenizedSentence& s, const Matrix& pos_table) {
  int n = s.size();
  int d_l = static_cast<int>(pos_table.cols());
  Matrix prefix = Matrix::Zero(n + 1, d_l);
  for (int t = 0; t < n; ++t) {
    int tag = s.pos_tags[t];
    if (tag < 0 || tag >= pos_table.rows())
      throw config_error(strf("pos tag id %d outside the embedding table (%d rows)", tag,
                              static_cast<int>(pos_table.rows())));
    prefix.row(t + 1) = prefix.row(t) + pos_table.row(tag);
  }
  Tensor3 r(n, n, d_l);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      int lo = std::min(i, j), hi = std::max(i, j);
      r.at(i, j) = (prefix.row(hi + 1) - prefix.row(lo)).transpose();
    }
  return r;
}

// ── Syntactic-distance channel ───────────────────────────────────────────────

// Hop count between every token pair over the undirected dependency edges.
inline IntMatrix build_sd_matrix(const TextualGraph& g) {
  int n = g.n;
  IntMatrix dist = IntMatrix::Constant(n, n, -1);
  std::vector<std::vector<int>> nbr(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && g.adjacency(i, j)) nbr[i].push_back(j);
  for (int src = 0; src < n; ++src) {
    dist(src, src) = 0;
    std::deque<int> queue{src};
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int v : nbr[u]) {
        if (dist(src, v) < 0) {
          dist(src, v) = dist(src, u) + 1;
          queue.push_back(v);
        }
      }
    }
    for (int v = 0; v < n; ++v)
      if (dist(src, v) < 0)
        throw input_error(strf("dependency graph is disconnected: no path from %d to %d", src, v));
  }
  return dist;
}

// ── PMI co-occurrence channel ────────────────────────────────────────────────

// Sentence-level occurrence statistics over a corpus: count(a) = sentences
// containing token type a, count(a, b) = sentences containing both.
struct PmiStats {
  long sentences = 0;
  std::map<std::string, long> token_counts;
  std::map<std::pair<std::string, std::string>, long> pair_counts;  // keys with first <= second

  void add_sentence(const std::vector<std::string>& tokens) {
    ++sentences;
    std::set<std::string> types(tokens.begin(), tokens.end());
    for (const auto& a : types) ++token_counts[a];
    for (auto it = types.begin(); it != types.end(); ++it) {
      for (auto jt = std::next(it); jt != types.end(); ++jt) ++pair_counts[{*it, *jt}];
    }
  }

  long count(const std::string& a) const {
    auto it = token_counts.find(a);
    return it == token_counts.end() ? 0 : it->second;
  }

  long count(const std::string& a, const std::string& b) const {
    if (a == b) return count(a);
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    auto it = pair_counts.find(key);
    return it == pair_counts.end() ? 0 : it->second;
  }

  // log( p(a,b) / (p(a) p(b)) ); -inf when any count is zero
  double pmi(const std::string& a, const std::string& b) const {
    long ca = count(a), cb = count(b), cab = count(a, b);
    if (ca == 0 || cb == 0 || cab == 0) return -std::numeric_limits<double>::infinity();
    return std::log(static_cast<double>(cab) * sentences /
                    (static_cast<double>(ca) * cb));
  }
};

template <typename SentenceRange>
inline PmiStats build_pmi_stats(const SentenceRange& corpus) {
  PmiStats stats;
  for (const auto& s : corpus) stats.add_sentence(s.tokens);
  if (stats.sentences == 0) throw input_error("co-occurrence statistics need a non-empty corpus");
  return stats;
}

// M[i][j] = ceil(PMI) clamped to cap when PMI >= 0, else -1.
inline IntMatrix build_co_matrix(const TokenizedSentence& s, const PmiStats& stats,
                                 int cap = kCoCap) {
  int n = s.size();
  IntMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double pmi = stats.pmi(s.tokens[i], s.tokens[j]);
      m(i, j) = pmi >= 0.0 ? std::min(static_cast<int>(std::ceil(pmi)), cap) : -1;
    }
  }
  return m;
}

// Plain tab-separated cache so repeated runs can skip the corpus scan:
//   sentences <N> / token <type> <count> / pair <a> <b> <count>
inline void save_pmi_stats(const PmiStats& stats, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write statistics cache: " + path);
  out << "sentences\t" << stats.sentences << "\n";
  for (const auto& [token, count] : stats.token_counts)
    out << "token\t" << token << "\t" << count << "\n";
  for (const auto& [pair, count] : stats.pair_counts)
    out << "pair\t" << pair.first << "\t" << pair.second << "\t" << count << "\n";
}

inline PmiStats load_pmi_stats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open statistics cache: " + path);
  PmiStats stats;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(line_no);
    std::istringstream fields(line);
    std::string kind;
    std::getline(fields, kind, '\t');
    try {
      if (kind == "sentences") {
        std::string v;
        std::getline(fields, v, '\t');
        stats.sentences = std::stol(v);
      } else if (kind == "token") {
        std::string t, v;
        std::getline(fields, t, '\t');
        std::getline(fields, v, '\t');
        stats.token_counts[t] = std::stol(v);
      } else if (kind == "pair") {
        std::string a, b, v;
        std::getline(fields, a, '\t');
        std::getline(fields, b, '\t');
        std::getline(fields, v, '\t');
        stats.pair_counts[{a, b}] = std::stol(v);
      } else {
        throw input_error(where + ": unknown row kind \"" + kind + "\"");
      }
    } catch (const std::invalid_argument&) {
      throw input_error(where + ": malformed count");
    }
  }
  if (stats.sentences <= 0) throw input_error(path + ": cache lacks a sentence count");
  return stats;
}

// Integer channel values to vectors via a lookup table; `offset` shifts the
// value range onto row indices (1 for Co so that -1 maps to row 0).
inline Tensor3 embed_integer_matrix(const IntMatrix& m, const Matrix& table, int offset) {
  int n = static_cast<int>(m.rows());
  Tensor3 r(n, static_cast<int>(m.cols()), static_cast<int>(table.cols()));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      int row = m(i, j) + offset;
      if (row < 0 || row >= table.rows())
        throw config_error(strf("channel value %d outside the embedding table (%d rows)",
                                m(i, j), static_cast<int>(table.rows())));
      r.at(i, j) = table.row(row).transpose();
    }
  }
  return r;
}

// ── W-GCN and fusion ─────────────────────────────────────────────────────────

struct WgcnParams {
  Vector w_r1;  // d_l
  double b = 0.0;
  Matrix w_r2;  // d_T x d_T

  static WgcnParams init(Rng& rng, int d_l, int d_t) {
    WgcnParams p;
    p.w_r1 = uniform_fanin_vector(rng, d_l, d_l);
    p.b = rng.uniform(-1.0 / std::sqrt(static_cast<double>(d_l)),
                      1.0 / std::sqrt(static_cast<double>(d_l)));
    p.w_r2 = uniform_fanin_matrix(rng, d_t, d_t);
    return p;
  }
};

struct WgcnResult {
  Matrix states;   // n x d_T
  Matrix weights;  // n x n, rows sum to 1
};

// Word i attends over positions j with weights softmax(ReLU(w_r1 . R(i,j) + b))
// and blends the projected context rows O W_r2^T.
inline WgcnResult w_gcn(const Tensor3& r, const Matrix& o, const WgcnParams& p) {
  int n = static_cast<int>(o.rows());
  if (r.rows() != n || r.cols() != n)
    throw config_error(strf("channel tensor is %dx%d but context has %d rows", r.rows(),
                            r.cols(), n));
  if (r.depth() != p.w_r1.size())
    throw config_error(strf("channel depth %d disagrees with w_r1 size %d", r.depth(),
                            static_cast<int>(p.w_r1.size())));
  Matrix projected = o * p.w_r2.transpose();  // n x d_T
  WgcnResult out;
  out.states.resize(n, static_cast<int>(projected.cols()));
  out.weights.resize(n, n);
  for (int i = 0; i < n; ++i) {
    Vector scores = ((r.row_slab(i) * p.w_r1).array() + p.b).cwiseMax(0.0);
    double mx = scores.maxCoeff();
    Vector e = (scores.array() - mx).exp();
    out.weights.row(i) = (e / e.sum()).transpose();
    out.states.row(i) = out.weights.row(i) * projected;
  }
  return out;
}

// S_i = fusion([S_i^Pos ; S_i^Sd ; S_i^Co]); realized as one affine map since
// no inner width is called for.
struct FusionParams {
  Matrix w;  // d_T x (3 * d_T)
  Vector b;  // d_T

  static FusionParams init(Rng& rng, int d_t) {
    FusionParams p;
    p.w = uniform_fanin_matrix(rng, d_t, 3 * d_t);
    p.b = uniform_fanin_vector(rng, d_t, 3 * d_t);
    return p;
  }
};

inline Matrix fuse_channels(const Matrix& s_pos, const Matrix& s_sd, const Matrix& s_co,
                            const FusionParams& p) {
  if (s_pos.rows() != s_sd.rows() || s_pos.rows() != s_co.rows() ||
      s_pos.cols() != s_sd.cols() || s_pos.cols() != s_co.cols())
    throw config_error("channel outputs must share one shape");
  int d = static_cast<int>(s_pos.cols());
  if (p.w.cols() != 3 * d)
    throw config_error(strf("fusion expects %d features, got %d",
                            static_cast<int>(p.w.cols()), 3 * d));
  Matrix concat(s_pos.rows(), 3 * d);
  concat << s_pos, s_sd, s_co;
  return (concat * p.w.transpose()).rowwise() + p.b.transpose();
}

}  // namespace gale
