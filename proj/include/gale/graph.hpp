#pragma once

#include "gale/common.hpp"
#include "gale/vocab.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

namespace gale {

inline constexpr int kNoEdge = -1;

struct TokenizedSentence {
  std::vector<std::string> tokens;
  std::vector<int> pos_tags;    // ids into LabelVocabulary::pos_labels
  std::vector<int> dep_heads;   // head index per token; the root points to itself
  std::vector<int> dep_labels;  // ids into LabelVocabulary::dependency_labels

  int size() const { return static_cast<int>(tokens.size()); }
};

// Throws input_error describing the first violated invariant; `where` prefixes
// the message (record id or "line N").
inline void validate_sentence(const TokenizedSentence& s, int max_tokens,
                              const std::string& where) {
  int n = s.size();
  if (n < 1) throw input_error(where + ": sentence is empty");
  if (n > max_tokens)
    throw input_error(strf("%s: sentence has %d tokens, max is %d", where.c_str(), n, max_tokens));
  if (static_cast<int>(s.pos_tags.size()) != n ||
      static_cast<int>(s.dep_heads.size()) != n ||
      static_cast<int>(s.dep_labels.size()) != n)
    throw input_error(strf("%s: field length mismatch (tokens=%d pos=%zu heads=%zu labels=%zu)",
                           where.c_str(), n, s.pos_tags.size(), s.dep_heads.size(),
                           s.dep_labels.size()));
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    int h = s.dep_heads[i];
    if (h < 0 || h >= n)
      throw input_error(strf("%s: head index %d of token %d out of range [0,%d)",
                             where.c_str(), h, i, n));
    if (h == i) ++roots;
  }
  if (roots == 0) throw input_error(where + ": no root (no token is its own head)");
  if (roots > 1) throw input_error(strf("%s: multiple roots (%d tokens are their own head)",
                                        where.c_str(), roots));
}

// Undirected dependency graph with self-loops. edge_labels is kNoEdge exactly
// where adjacency is 0; self-loops carry the reserved self label (id 0).
struct TextualGraph {
  int n = 0;
  IntMatrix adjacency;
  IntMatrix edge_labels;
};

inline TextualGraph build_textual_graph(const TokenizedSentence& s) {
  int n = s.size();
  TextualGraph g;
  g.n = n;
  g.adjacency = IntMatrix::Zero(n, n);
  g.edge_labels = IntMatrix::Constant(n, n, kNoEdge);
  for (int i = 0; i < n; ++i) {
    g.adjacency(i, i) = 1;
    g.edge_labels(i, i) = 0;  // <self>
  }
  for (int i = 0; i < n; ++i) {
    int h = s.dep_heads[i];
    if (h == i) continue;
    g.adjacency(i, h) = 1;
    g.adjacency(h, i) = 1;
    g.edge_labels(i, h) = s.dep_labels[i];
    g.edge_labels(h, i) = s.dep_labels[i];
  }
  return g;
}

struct SceneObject {
  std::string label;
  double score = 0.0;
};

struct SceneRelation {
  int subject = 0;
  std::string label;
  int object = 0;
};

// Raw scene graph as read from a file, before top-k selection.
struct SceneGraph {
  std::vector<SceneObject> objects;
  std::vector<SceneRelation> relations;
};

struct VisualGraph {
  int k = 0;
  std::vector<int> object_labels;   // ids into visual object label table
  std::vector<std::string> object_names;
  std::vector<double> object_scores;  // non-increasing after top-k selection
  IntMatrix adjacency;
  IntMatrix edge_labels;  // ids into LabelVocabulary::visual_relation_labels
};

// Keeps the k_max highest-scoring objects (stable on ties), drops relation
// triples that reference discarded objects, and interns labels into vocab.
inline VisualGraph build_visual_graph(const SceneGraph& scene, int k_max,
                                      LabelTable& object_labels,
                                      LabelTable& relation_labels,
                                      const std::string& where) {
  int total = static_cast<int>(scene.objects.size());
  if (total == 0) throw input_error(where + ": empty scene graph");
  if (k_max < 1) throw config_error("max_objects must be positive");
  for (const auto& r : scene.relations) {
    if (r.subject < 0 || r.subject >= total || r.object < 0 || r.object >= total)
      throw input_error(strf("%s: relation (%d, %s, %d) references an object outside [0,%d)",
                             where.c_str(), r.subject, r.label.c_str(), r.object, total));
  }

  std::vector<int> order(scene.objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scene.objects[a].score > scene.objects[b].score;
  });
  int k = std::min<int>(k_max, total);
  order.resize(k);

  std::vector<int> new_index(scene.objects.size(), -1);
  for (int pos = 0; pos < k; ++pos) new_index[order[pos]] = pos;

  VisualGraph g;
  g.k = k;
  g.adjacency = IntMatrix::Zero(k, k);
  g.edge_labels = IntMatrix::Constant(k, k, kNoEdge);
  for (int pos = 0; pos < k; ++pos) {
    const auto& obj = scene.objects[order[pos]];
    g.object_labels.push_back(object_labels.intern(obj.label));
    g.object_names.push_back(obj.label);
    g.object_scores.push_back(obj.score);
    g.adjacency(pos, pos) = 1;
    g.edge_labels(pos, pos) = 0;  // <self>
  }
  for (const auto& r : scene.relations) {
    int a = new_index[r.subject], b = new_index[r.object];
    if (a < 0 || b < 0 || a == b) continue;  // dropped object or self-referencing triple
    int label = relation_labels.intern(r.label);
    g.adjacency(a, b) = 1;
    g.adjacency(b, a) = 1;
    g.edge_labels(a, b) = label;
    g.edge_labels(b, a) = label;
  }
  return g;
}

}  // namespace gale
