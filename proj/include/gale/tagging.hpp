#pragma once

#include "gale/common.hpp"
#include "gale/rng.hpp"
#include "gale/tensor.hpp"
#include "gale/vocab.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace gale {

// Inclusive token span.
struct Span {
  int start = 0;
  int end = 0;

  bool operator==(const Span& o) const { return start == o.start && end == o.end; }
  bool overlaps(const Span& o) const { return start <= o.end && o.start <= end; }
  bool contains(int i) const { return i >= start && i <= end; }
  int length() const { return end - start + 1; }
};

// (entity span, type) pair plus the relation between the two entities.
// Canonical form keeps e1 as the span with the smaller start index; the grid
// scheme carries no direction information beyond token order.
struct Quintuple {
  Span e1;
  int t1 = 0;  // entity type id
  Span e2;
  int t2 = 0;
  int rel = 0;  // relation type id

  auto key() const { return std::tie(e1.start, e1.end, e2.start, e2.end, t1, t2, rel); }
  bool operator==(const Quintuple& o) const { return key() == o.key(); }
  bool operator<(const Quintuple& o) const { return key() < o.key(); }
};

inline Quintuple canonical(Quintuple q) {
  if (q.e2.start < q.e1.start) {
    std::swap(q.e1, q.e2);
    std::swap(q.t1, q.t2);
  }
  return q;
}

inline void validate_quintuple(const Quintuple& q, int n, const std::string& where) {
  for (const Span& s : {q.e1, q.e2}) {
    if (s.start < 0 || s.end >= n || s.start > s.end)
      throw input_error(strf("%s: entity span [%d,%d] invalid for sentence length %d",
                             where.c_str(), s.start, s.end, n));
  }
  if (q.e1 == q.e2) throw input_error(where + ": quintuple has identical entity spans");
  if (q.e1.overlaps(q.e2))
    throw input_error(strf("%s: entity spans [%d,%d] and [%d,%d] overlap within a quintuple",
                           where.c_str(), q.e1.start, q.e1.end, q.e2.start, q.e2.end));
}

// n x n tag grid over {N} + entity types + relation types; cells default to N.
struct TagGrid {
  int n = 0;
  IntMatrix cells;

  static TagGrid empty(int n) { return TagGrid{n, IntMatrix::Zero(n, n)}; }
};

// ── Grid codec ─────────────────────────────────────────────────────────────
//
// Encoding: every cell (i, j) with i and j inside one entity span carries that
// span's type tag; every cell (i in later span, j in earlier span) of a
// related pair carries the relation tag; all other cells stay N. Decoding
// reads entity spans off maximal same-type diagonal runs and relations off the
// (later x earlier) block by majority vote, so decode(encode(Q)) == Q for
// quintuple sets with pairwise disjoint spans.

inline TagGrid encode_quintuples(const std::vector<Quintuple>& quints, int n,
                                 const LabelVocabulary& vocab) {
  TagGrid grid = TagGrid::empty(n);

  // Distinct spans must be identical or disjoint, and one span gets one type.
  std::map<std::pair<int, int>, int> span_type;
  auto add_span = [&](const Span& s, int type) {
    for (const auto& [key, t] : span_type) {
      Span other{key.first, key.second};
      if (other == s) continue;
      if (other.overlaps(s))
        throw input_error(strf("entity spans [%d,%d] and [%d,%d] partially overlap",
                               s.start, s.end, other.start, other.end));
    }
    auto [it, inserted] = span_type.emplace(std::make_pair(s.start, s.end), type);
    if (!inserted && it->second != type)
      throw input_error(strf("conflicting entity types for span [%d,%d]: %s vs %s",
                             s.start, s.end, vocab.entity_types.name(it->second).c_str(),
                             vocab.entity_types.name(type).c_str()));
  };

  for (const auto& raw : quints) {
    Quintuple q = canonical(raw);
    validate_quintuple(q, n, "encode");
    add_span(q.e1, q.t1);
    add_span(q.e2, q.t2);
  }
  for (const auto& [key, type] : span_type) {
    int tag = vocab.entity_tag(type);
    for (int i = key.first; i <= key.second; ++i)
      for (int j = key.first; j <= key.second; ++j) grid.cells(i, j) = tag;
  }
  for (const auto& raw : quints) {
    Quintuple q = canonical(raw);
    int tag = vocab.relation_tag(q.rel);
    for (int i = q.e2.start; i <= q.e2.end; ++i) {
      for (int j = q.e1.start; j <= q.e1.end; ++j) {
        if (grid.cells(i, j) != 0 && grid.cells(i, j) != tag)
          throw input_error(strf("conflicting tags for cell (%d,%d): %s vs %s",
                                 i, j, vocab.tag_name(grid.cells(i, j)).c_str(),
                                 vocab.tag_name(tag).c_str()));
        grid.cells(i, j) = tag;
      }
    }
  }
  return grid;
}

// Total on arbitrary grids: cells outside the recognized patterns are ignored.
inline std::vector<Quintuple> decode_grid(const TagGrid& grid, const LabelVocabulary& vocab) {
  int n = grid.n;

  // Entity spans: maximal runs of consecutive diagonal cells with one entity tag.
  struct DecodedSpan {
    Span span;
    int type;
  };
  std::vector<DecodedSpan> spans;
  int i = 0;
  while (i < n) {
    int tag = grid.cells(i, i);
    if (!vocab.is_entity_tag(tag)) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && grid.cells(j + 1, j + 1) == tag) ++j;
    spans.push_back({Span{i, j}, vocab.entity_type_of_tag(tag)});
    i = j + 1;
  }

  std::vector<Quintuple> out;
  for (size_t a = 0; a < spans.size(); ++a) {
    for (size_t b = a + 1; b < spans.size(); ++b) {
      const DecodedSpan& first = spans[a];   // earlier span (diagonal order)
      const DecodedSpan& later = spans[b];
      std::map<int, int> votes;  // relation tag -> count, ordered for tie-break
      for (int r = later.span.start; r <= later.span.end; ++r)
        for (int c = first.span.start; c <= first.span.end; ++c)
          if (vocab.is_relation_tag(grid.cells(r, c))) ++votes[grid.cells(r, c)];
      if (votes.empty()) continue;
      int best_tag = 0, best_count = -1;
      for (const auto& [tag, count] : votes) {
        if (count > best_count) {  // ties keep the lowest tag id (map order)
          best_tag = tag;
          best_count = count;
        }
      }
      out.push_back(Quintuple{first.span, first.type, later.span, later.type,
                              vocab.relation_type_of_tag(best_tag)});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ── Prediction head ─────────────────────────────────────────────────────────

// Linear tag classifier over the concatenated word-pair features [S_i; S_j].
struct PredictionHead {
  Matrix w;  // d_y x (2 * d_t)
  Vector b;  // d_y
};

inline PredictionHead init_head(int tag_count, int d_t, Rng* rng = nullptr) {
  PredictionHead h;
  if (rng) {
    double bound = 1.0 / std::sqrt(2.0 * d_t);
    h.w = Matrix::NullaryExpr(tag_count, 2 * d_t, [&]() { return rng->uniform(-bound, bound); });
  } else {
    h.w = Matrix::Zero(tag_count, 2 * d_t);
  }
  h.b = Vector::Zero(tag_count);
  return h;
}

// p(i, j) = softmax(W [S_i; S_j] + b); returns n x n x d_y.
inline Tensor3 predict_grid(const Matrix& s, const PredictionHead& head) {
  int n = static_cast<int>(s.rows());
  int d = static_cast<int>(s.cols());
  int dy = static_cast<int>(head.w.rows());
  if (head.w.cols() != 2 * d)
    throw config_error(strf("prediction head expects %d features, got %d",
                            static_cast<int>(head.w.cols()), 2 * d));
  Matrix left = s * head.w.leftCols(d).transpose();    // n x d_y
  Matrix right = s * head.w.rightCols(d).transpose();  // n x d_y
  Tensor3 probs(n, n, dy);
  Vector logits(dy);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      logits = left.row(i).transpose() + right.row(j).transpose() + head.b;
      double mx = logits.maxCoeff();
      Vector e = (logits.array() - mx).exp();
      probs.at(i, j) = e / e.sum();
    }
  }
  return probs;
}

inline TagGrid grid_argmax(const Tensor3& probs) {
  TagGrid g = TagGrid::empty(probs.rows());
  for (int i = 0; i < probs.rows(); ++i) {
    for (int j = 0; j < probs.cols(); ++j) {
      Eigen::Index best;
      probs.at(i, j).maxCoeff(&best);
      g.cells(i, j) = static_cast<int>(best);
    }
  }
  return g;
}

// Cross-entropy summed over all n^2 cells.
inline double main_loss(const Tensor3& probs, const TagGrid& gold) {
  if (probs.rows() != gold.n || probs.cols() != gold.n)
    throw config_error("probability tensor and gold grid disagree on sentence length");
  double loss = 0.0;
  for (int i = 0; i < gold.n; ++i)
    for (int j = 0; j < gold.n; ++j) loss -= std::log(probs.at(i, j)(gold.cells(i, j)));
  return loss;
}

inline double joint_loss(double l_main, double l_graph, double lambda) {
  if (lambda < 0.0) throw config_error("lambda must be non-negative");
  return l_main + lambda * l_graph;
}

struct HeadGradients {
  Matrix w;  // same shape as head.w
  Vector b;
};

// Closed-form softmax cross-entropy gradient: sum over cells of
// (p - onehot(gold)) outer [S_i; S_j]. Reports the summed loss of the same
// forward pass through loss_out when given.
inline HeadGradients head_gradients(const Matrix& s, const TagGrid& gold,
                                    const PredictionHead& head, double* loss_out = nullptr) {
  int n = static_cast<int>(s.rows());
  int d = static_cast<int>(s.cols());
  int dy = static_cast<int>(head.w.rows());
  Tensor3 probs = predict_grid(s, head);
  if (loss_out) *loss_out = main_loss(probs, gold);
  HeadGradients g{Matrix::Zero(dy, 2 * d), Vector::Zero(dy)};
  Vector delta(dy);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      delta = probs.at(i, j);
      delta(gold.cells(i, j)) -= 1.0;
      g.w.leftCols(d).noalias() += delta * s.row(i);
      g.w.rightCols(d).noalias() += delta * s.row(j);
      g.b += delta;
    }
  }
  return g;
}

// ── Exact-match evaluation ──────────────────────────────────────────────────

struct EvalCounts {
  long correct = 0;
  long predicted = 0;
  long gold = 0;

  EvalCounts& operator+=(const EvalCounts& o) {
    correct += o.correct;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline EvalCounts eval_counts(const std::vector<Quintuple>& pred,
                              const std::vector<Quintuple>& gold) {
  std::set<Quintuple> p, g;
  for (const auto& q : pred) p.insert(canonical(q));
  for (const auto& q : gold) g.insert(canonical(q));
  EvalCounts c;
  c.predicted = static_cast<long>(p.size());
  c.gold = static_cast<long>(g.size());
  for (const auto& q : p) c.correct += g.count(q);
  return c;
}

inline Metrics metrics_from_counts(const EvalCounts& c) {
  Metrics m;
  m.precision = c.predicted == 0 ? 0.0 : static_cast<double>(c.correct) / c.predicted;
  m.recall = c.gold == 0 ? 0.0 : static_cast<double>(c.correct) / c.gold;
  m.f1 = (m.precision + m.recall) == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

// A prediction is correct only when both spans, both types, and the relation
// all match a gold quintuple exactly.
inline Metrics evaluate(const std::vector<Quintuple>& pred,
                        const std::vector<Quintuple>& gold) {
  return metrics_from_counts(eval_counts(pred, gold));
}

inline std::string format_metrics_report(const Metrics& m) {
  return strf("precision=%.4f\nrecall=%.4f\nf1=%.4f\n", m.precision, m.recall, m.f1);
}

}  // namespace gale
