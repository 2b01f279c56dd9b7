#pragma once

#include "gale/common.hpp"
#include "gale/graph.hpp"
#include "gale/tagging.hpp"
#include "gale/vocab.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace gale {

using json = nlohmann::json;

// One sentence-image pair plus its gold annotation.
struct Record {
  std::string id;
  TokenizedSentence sentence;
  SceneGraph scene;
  std::vector<Quintuple> gold;
};

namespace detail {

inline const json& require_field(const json& j, const char* field, const std::string& where) {
  auto it = j.find(field);
  if (it == j.end()) throw input_error(where + ": missing field \"" + field + "\"");
  return *it;
}

inline std::vector<std::string> string_list(const json& j, const char* field,
                                            const std::string& where) {
  const json& v = require_field(j, field, where);
  if (!v.is_array()) throw input_error(where + ": field \"" + field + "\" must be a list");
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_string())
      throw input_error(where + ": field \"" + field + "\" must contain strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline std::vector<int> int_list(const json& j, const char* field, const std::string& where) {
  const json& v = require_field(j, field, where);
  if (!v.is_array()) throw input_error(where + ": field \"" + field + "\" must be a list");
  std::vector<int> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number_integer())
      throw input_error(where + ": field \"" + field + "\" must contain integers");
    out.push_back(e.get<int>());
  }
  return out;
}

inline int lookup_type(const LabelTable& table, const std::string& name, const char* kind,
                       const std::string& where) {
  int id = table.lookup(name);
  if (id < 0) throw input_error(strf("%s: unknown %s \"%s\"", where.c_str(), kind, name.c_str()));
  return id;
}

}  // namespace detail

inline SceneGraph parse_scene_graph(const json& j, const std::string& where) {
  SceneGraph scene;
  const json& objects = detail::require_field(j, "objects", where);
  if (!objects.is_array()) throw input_error(where + ": \"objects\" must be a list");
  for (const auto& o : objects) {
    SceneObject obj;
    obj.label = detail::require_field(o, "label", where).get<std::string>();
    obj.score = detail::require_field(o, "score", where).get<double>();
    scene.objects.push_back(std::move(obj));
  }
  const json& relations = detail::require_field(j, "relations", where);
  if (!relations.is_array()) throw input_error(where + ": \"relations\" must be a list");
  for (const auto& r : relations) {
    if (!r.is_array() || r.size() != 3 || !r[0].is_number_integer() || !r[1].is_string() ||
        !r[2].is_number_integer())
      throw input_error(where + ": each relation must be [subj_idx, label, obj_idx]");
    scene.relations.push_back({r[0].get<int>(), r[1].get<std::string>(), r[2].get<int>()});
  }
  return scene;
}

inline std::vector<Quintuple> parse_quintuples(const json& j, const LabelVocabulary& vocab,
                                               const std::string& where) {
  if (!j.is_array()) throw input_error(where + ": \"gold_quintuples\" must be a list");
  std::vector<Quintuple> out;
  for (const auto& q : j) {
    if (!q.is_array() || q.size() != 7)
      throw input_error(where +
                        ": each quintuple must be [s1, e1, type1, s2, e2, type2, relation]");
    Quintuple quint;
    quint.e1 = Span{q[0].get<int>(), q[1].get<int>()};
    quint.t1 = detail::lookup_type(vocab.entity_types, q[2].get<std::string>(), "entity type",
                                   where);
    quint.e2 = Span{q[3].get<int>(), q[4].get<int>()};
    quint.t2 = detail::lookup_type(vocab.entity_types, q[5].get<std::string>(), "entity type",
                                   where);
    quint.rel = detail::lookup_type(vocab.relation_types, q[6].get<std::string>(),
                                    "relation type", where);
    out.push_back(canonical(quint));
  }
  return out;
}

inline Record parse_record(const json& j, LabelVocabulary& vocab, int max_tokens,
                           const std::string& where) {
  Record rec;
  rec.id = detail::require_field(j, "id", where).get<std::string>();
  std::string at = where + " (record " + rec.id + ")";

  rec.sentence.tokens = detail::string_list(j, "tokens", at);
  for (const auto& pos : detail::string_list(j, "pos", at))
    rec.sentence.pos_tags.push_back(vocab.pos_labels.intern(pos));
  rec.sentence.dep_heads = detail::int_list(j, "heads", at);
  for (const auto& dep : detail::string_list(j, "dep_labels", at)) {
    if (dep == kSelfEdgeLabel)
      throw input_error(at + ": dependency label \"" + dep + "\" is reserved");
    rec.sentence.dep_labels.push_back(vocab.dependency_labels.intern(dep));
  }
  validate_sentence(rec.sentence, max_tokens, at);

  rec.scene = parse_scene_graph(detail::require_field(j, "scene_graph", at), at);
  for (const auto& obj : rec.scene.objects) vocab.visual_object_labels.intern(obj.label);
  for (const auto& rel : rec.scene.relations) {
    if (rel.label == kSelfEdgeLabel)
      throw input_error(at + ": visual relation label \"" + rel.label + "\" is reserved");
    vocab.visual_relation_labels.intern(rel.label);
  }
  rec.gold = parse_quintuples(detail::require_field(j, "gold_quintuples", at), vocab, at);
  for (const auto& q : rec.gold) validate_quintuple(q, rec.sentence.size(), at);
  return rec;
}

// Line-delimited records, one JSON object per non-empty line. Unseen POS and
// dependency labels are interned into the vocabulary as they appear.
inline std::vector<Record> load_corpus(const std::string& path, LabelVocabulary& vocab,
                                       int max_tokens) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open corpus file: " + path);
  std::vector<Record> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw input_error(where + ": invalid JSON: " + e.what());
    }
    records.push_back(parse_record(j, vocab, max_tokens, where));
  }
  return records;
}

inline SceneGraph load_scene_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open scene graph file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw input_error(path + ": invalid JSON: " + std::string(e.what()));
  }
  return parse_scene_graph(j, path);
}

// ── Quintuple files ──────────────────────────────────────────────────────────
//
// One record per line: the id, then tab-separated 7-tuples
//   start1,end1,type1,start2,end2,type2,relation

inline std::string format_quintuple_line(const std::string& id,
                                         const std::vector<Quintuple>& quints,
                                         const LabelVocabulary& vocab) {
  std::string line = id;
  std::vector<Quintuple> sorted = quints;
  for (auto& q : sorted) q = canonical(q);
  std::sort(sorted.begin(), sorted.end());
  for (const auto& q : sorted) {
    line += strf("\t%d,%d,%s,%d,%d,%s,%s", q.e1.start, q.e1.end,
                 vocab.entity_types.name(q.t1).c_str(), q.e2.start, q.e2.end,
                 vocab.entity_types.name(q.t2).c_str(),
                 vocab.relation_types.name(q.rel).c_str());
  }
  return line;
}

inline void write_quintuple_file(const std::string& path,
                                 const std::vector<std::pair<std::string, std::vector<Quintuple>>>&
                                     per_record,
                                 const LabelVocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write quintuple file: " + path);
  for (const auto& [id, quints] : per_record)
    out << format_quintuple_line(id, quints, vocab) << "\n";
}

inline std::vector<std::pair<std::string, std::vector<Quintuple>>> read_quintuple_file(
    const std::string& path, const LabelVocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open quintuple file: " + path);
  std::vector<std::pair<std::string, std::vector<Quintuple>>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string where = path + ":" + std::to_string(line_no);
    std::istringstream fields(line);
    std::string id;
    if (!std::getline(fields, id, '\t') || id.empty())
      throw input_error(where + ": missing record id");
    std::vector<Quintuple> quints;
    std::string tuple;
    while (std::getline(fields, tuple, '\t')) {
      std::istringstream parts(tuple);
      std::string s1, e1, t1, s2, e2, t2, rel, extra;
      if (!std::getline(parts, s1, ',') || !std::getline(parts, e1, ',') ||
          !std::getline(parts, t1, ',') || !std::getline(parts, s2, ',') ||
          !std::getline(parts, e2, ',') || !std::getline(parts, t2, ',') ||
          !std::getline(parts, rel, ',') || std::getline(parts, extra, ','))
        throw input_error(where + ": malformed 7-tuple \"" + tuple + "\"");
      Quintuple q;
      try {
        q.e1 = Span{std::stoi(s1), std::stoi(e1)};
        q.e2 = Span{std::stoi(s2), std::stoi(e2)};
      } catch (const std::exception&) {
        throw input_error(where + ": non-numeric span bound in \"" + tuple + "\"");
      }
      q.t1 = detail::lookup_type(vocab.entity_types, t1, "entity type", where);
      q.t2 = detail::lookup_type(vocab.entity_types, t2, "entity type", where);
      q.rel = detail::lookup_type(vocab.relation_types, rel, "relation type", where);
      quints.push_back(canonical(q));
    }
    out.emplace_back(std::move(id), std::move(quints));
  }
  return out;
}

}  // namespace gale
