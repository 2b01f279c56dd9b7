#pragma once

#include "gale/common.hpp"

#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace gale {

// Reserved edge label carried by every diagonal self-loop.
inline constexpr const char* kSelfEdgeLabel = "<self>";

// Grows-on-first-use string <-> id table. Insertion order is the id order, so
// vocabularies built from a file are deterministic in file order.
class LabelTable {
 public:
  LabelTable() = default;
  explicit LabelTable(std::vector<std::string> names) {
    for (auto& n : names) intern(n);
  }

  int intern(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    int id = static_cast<int>(names_.size());
    names_.push_back(name);
    index_.emplace(name, id);
    return id;
  }

  int lookup(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
  }

  const std::string& name(int id) const { return names_.at(static_cast<size_t>(id)); }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

// Entity/relation inventories are configuration; dependency, POS, and visual
// relation labels accumulate from the corpus. Dependency and visual tables
// reserve id 0 for the self-loop label.
struct LabelVocabulary {
  LabelTable entity_types;
  LabelTable relation_types;
  LabelTable dependency_labels;
  LabelTable pos_labels;
  LabelTable visual_object_labels;
  LabelTable visual_relation_labels;

  static LabelVocabulary defaults() {
    LabelVocabulary v;
    v.entity_types = LabelTable({"PER", "LOC", "ORG", "MISC"});
    v.relation_types =
        LabelTable({"peer", "member_of", "awarded", "present_in", "couple", "part_of"});
    v.dependency_labels.intern(kSelfEdgeLabel);
    v.visual_relation_labels.intern(kSelfEdgeLabel);
    return v;
  }

  // Tag space layout: 0 = N, then entity types, then relation types.
  int tag_count() const { return 1 + entity_types.size() + relation_types.size(); }
  int entity_tag(int entity_type_id) const { return 1 + entity_type_id; }
  int relation_tag(int relation_type_id) const {
    return 1 + entity_types.size() + relation_type_id;
  }
  bool is_entity_tag(int tag) const { return tag >= 1 && tag <= entity_types.size(); }
  bool is_relation_tag(int tag) const {
    return tag > entity_types.size() && tag < tag_count();
  }
  int entity_type_of_tag(int tag) const { return tag - 1; }
  int relation_type_of_tag(int tag) const { return tag - 1 - entity_types.size(); }

  std::string tag_name(int tag) const {
    if (tag == 0) return "N";
    if (is_entity_tag(tag)) return entity_types.name(entity_type_of_tag(tag));
    return relation_types.name(relation_type_of_tag(tag));
  }
};

namespace detail {
inline void check_unique(const std::vector<std::string>& names, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names)
    if (!seen.insert(n).second)
      throw input_error(strf("duplicate %s label: %s", what, n.c_str()));
}
}  // namespace detail

// Plain-text vocabulary config:
//   [entity_types]
//   PER
//   ...
//   [relation_types]
//   peer
//   ...
// Blank lines and '#' comments are ignored.
inline LabelVocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error(strf("cannot open vocabulary file: %s", path.c_str()));
  std::vector<std::string> entities, relations;
  std::vector<std::string>* target = nullptr;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t a = line.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    size_t b = line.find_last_not_of(" \t");
    std::string tok = line.substr(a, b - a + 1);
    if (tok.empty() || tok[0] == '#') continue;
    if (tok == "[entity_types]") {
      target = &entities;
    } else if (tok == "[relation_types]") {
      target = &relations;
    } else if (tok.front() == '[') {
      throw input_error(strf("%s:%d: unknown section %s", path.c_str(), lineno, tok.c_str()));
    } else {
      if (!target)
        throw input_error(strf("%s:%d: label before any section header", path.c_str(), lineno));
      target->push_back(tok);
    }
  }
  if (entities.empty()) throw input_error(strf("%s: no entity types listed", path.c_str()));
  if (relations.empty()) throw input_error(strf("%s: no relation types listed", path.c_str()));
  detail::check_unique(entities, "entity type");
  detail::check_unique(relations, "relation type");
  LabelVocabulary v;
  v.entity_types = LabelTable(std::move(entities));
  v.relation_types = LabelTable(std::move(relations));
  v.dependency_labels.intern(kSelfEdgeLabel);
  v.visual_relation_labels.intern(kSelfEdgeLabel);
  return v;
}

}  // namespace gale
