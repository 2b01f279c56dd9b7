#pragma once

#include "gale/common.hpp"
#include "gale/graph.hpp"
#include "gale/rng.hpp"
#include "gale/tensor.hpp"
#include "gale/vocab.hpp"

#include <json.hpp>

#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace gale {

// Deterministic stand-in for a pretrained encoder: a pure function of
// (key, seed, dim). Components are uniform in [-1, 1).
inline Vector hashed_embedding(const std::string& key, uint64_t seed, int dim) {
  Rng rng = stream_rng(seed, key);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.uniform(-1.0, 1.0);
  return v;
}

// Precomputed vectors keyed by record id, one JSON object per line:
//   {"id": ..., "tokens": [[...], ...], "objects": [[...], ...]}
struct EmbeddingFile {
  std::unordered_map<std::string, Matrix> tokens;
  std::unordered_map<std::string, Matrix> objects;
};

namespace detail {

inline Matrix parse_embedding_rows(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw input_error(where + ": expected a non-empty list of rows");
  int cols = -1;
  Matrix m;
  for (size_t r = 0; r < j.size(); ++r) {
    const auto& row = j[r];
    if (!row.is_array()) throw input_error(where + ": rows must be lists of numbers");
    if (cols < 0) {
      cols = static_cast<int>(row.size());
      m.resize(static_cast<int>(j.size()), cols);
    }
    if (static_cast<int>(row.size()) != cols)
      throw input_error(where + ": ragged embedding rows");
    for (int c = 0; c < cols; ++c) m(static_cast<int>(r), c) = row[c].get<double>();
  }
  return m;
}

}  // namespace detail

inline EmbeddingFile load_embedding_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open embedding file: " + path);
  EmbeddingFile file;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw input_error(where + ": invalid JSON: " + e.what());
    }
    auto id_it = j.find("id");
    if (id_it == j.end()) throw input_error(where + ": missing field \"id\"");
    std::string id = id_it->get<std::string>();
    auto tok_it = j.find("tokens");
    if (tok_it != j.end()) file.tokens[id] = detail::parse_embedding_rows(*tok_it, where);
    auto obj_it = j.find("objects");
    if (obj_it != j.end()) file.objects[id] = detail::parse_embedding_rows(*obj_it, where);
  }
  return file;
}

// Where node vectors come from: a hash of each node's string, or rows loaded
// from a precomputed file.
struct EmbeddingSource {
  enum class Kind { hashed, file } kind = Kind::hashed;
  uint64_t seed = 0;
  const EmbeddingFile* file = nullptr;

  static EmbeddingSource hashed(uint64_t seed) { return {Kind::hashed, seed, nullptr}; }
  static EmbeddingSource from_file(const EmbeddingFile& f) {
    return {Kind::file, 0, &f};
  }
};

inline Matrix embed_tokens(const TokenizedSentence& s, const EmbeddingSource& src, int dim,
                           const std::string& record_id) {
  if (src.kind == EmbeddingSource::Kind::file) {
    auto it = src.file->tokens.find(record_id);
    if (it == src.file->tokens.end())
      throw input_error("missing embedding: " + record_id + " (tokens)");
    if (it->second.rows() != s.size() || it->second.cols() != dim)
      throw input_error(strf("embedding shape mismatch for %s: got %dx%d, expected %dx%d",
                             record_id.c_str(), static_cast<int>(it->second.rows()),
                             static_cast<int>(it->second.cols()), s.size(), dim));
    return it->second;
  }
  Matrix x(s.size(), dim);
  for (int i = 0; i < s.size(); ++i)
    x.row(i) = hashed_embedding(s.tokens[i], src.seed, dim).transpose();
  return x;
}

inline Matrix embed_objects(const VisualGraph& g, const EmbeddingSource& src, int dim,
                            const std::string& record_id) {
  if (src.kind == EmbeddingSource::Kind::file) {
    auto it = src.file->objects.find(record_id);
    if (it == src.file->objects.end())
      throw input_error("missing embedding: " + record_id + " (objects)");
    if (it->second.rows() != g.k || it->second.cols() != dim)
      throw input_error(strf("embedding shape mismatch for %s: got %dx%d, expected %dx%d",
                             record_id.c_str(), static_cast<int>(it->second.rows()),
                             static_cast<int>(it->second.cols()), g.k, dim));
    return it->second;
  }
  Matrix x(g.k, dim);
  for (int i = 0; i < g.k; ++i)
    x.row(i) = hashed_embedding(g.object_names[i], src.seed, dim).transpose();
  return x;
}

// Trainable vector per edge label, rows indexed by label id.
struct EdgeTable {
  Matrix vectors;  // label_count x d_z

  static EdgeTable init(int label_count, int d_z, Rng& rng) {
    return EdgeTable{uniform_fanin_matrix(rng, label_count, d_z)};
  }
};

// tensor(i, j) = table row of the edge label where adjacent, zero otherwise.
template <typename Graph>
inline Tensor3 embed_edges(const Graph& g, const EdgeTable& table) {
  int n = static_cast<int>(g.adjacency.rows());
  int d_z = static_cast<int>(table.vectors.cols());
  Tensor3 z(n, n, d_z);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!g.adjacency(i, j)) continue;
      int label = g.edge_labels(i, j);
      if (label < 0 || label >= table.vectors.rows())
        throw input_error(strf("edge label id %d outside transition table (%d rows)", label,
                               static_cast<int>(table.vectors.rows())));
      z.at(i, j) = table.vectors.row(label).transpose();
    }
  }
  return z;
}

}  // namespace gale
