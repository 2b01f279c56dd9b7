#pragma once

#include "gale/common.hpp"
#include "gale/corpus.hpp"
#include "gale/graph.hpp"
#include "gale/rng.hpp"
#include "gale/tagging.hpp"
#include "gale/vocab.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

namespace gale {

struct SynthOptions {
  int records = 20;
  int min_tokens = 8;
  int max_tokens = 70;
  int min_objects = 2;
  int max_objects = 12;
  int max_quintuples = 2;
  uint64_t seed = 0;
};

namespace detail {

inline const std::vector<std::string>& synth_word_pool() {
  static const std::vector<std::string> pool = [] {
    std::vector<std::string> w;
    for (int i = 0; i < 48; ++i) w.push_back(strf("w%02d", i));
    return w;
  }();
  return pool;
}

inline const std::vector<std::string>& synth_pos_pool() {
  static const std::vector<std::string> pool{"NN", "NNP", "VB", "JJ", "RB", "DT", "IN"};
  return pool;
}

inline const std::vector<std::string>& synth_dep_pool() {
  static const std::vector<std::string> pool{"nsubj", "obj",    "det",  "amod",
                                             "advmod", "nmod", "case"};
  return pool;
}

inline const std::vector<std::string>& synth_object_pool() {
  static const std::vector<std::string> pool{"person", "ball",  "trophy", "court",
                                             "jersey", "crowd", "banner", "car"};
  return pool;
}

inline const std::vector<std::string>& synth_visual_rel_pool() {
  static const std::vector<std::string> pool{"holding", "near", "wearing", "above", "left_of"};
  return pool;
}

// Spans usable for synthetic gold: pairwise separated by at least one token,
// so the grid codec round-trips them exactly.
inline bool span_fits(const Span& s, const std::vector<Span>& taken) {
  for (const Span& t : taken)
    if (s.start <= t.end + 1 && t.start <= s.end + 1) return false;
  return true;
}

}  // namespace detail

// Random but fully deterministic record: random tree over the tokens, random
// scene graph, and up to max_quintuples planted gold quintuples.
inline Record synth_record(int index, const SynthOptions& opt, const LabelVocabulary& vocab) {
  Rng rng = stream_rng(opt.seed, strf("synth/record/%d", index));
  Record rec;
  rec.id = strf("synth-%04d", index);

  int n = rng.uniform_int(opt.min_tokens, opt.max_tokens);
  const auto& words = detail::synth_word_pool();
  const auto& pos = detail::synth_pos_pool();
  const auto& deps = detail::synth_dep_pool();
  rec.sentence.tokens.reserve(n);
  for (int i = 0; i < n; ++i)
    rec.sentence.tokens.push_back(words[rng.uniform_int(0, static_cast<int>(words.size()) - 1)]);
  // The sentence keeps POS and dependency labels as interned ids, so the
  // synthesizer works against a vocabulary that must already hold the pools
  // (register_synth_labels below).
  for (int i = 0; i < n; ++i) {
    int p = vocab.pos_labels.lookup(pos[rng.uniform_int(0, static_cast<int>(pos.size()) - 1)]);
    rec.sentence.pos_tags.push_back(p);
  }
  // Random tree: the root is token 0; every later token hangs off an earlier one.
  rec.sentence.dep_heads.resize(n);
  rec.sentence.dep_labels.resize(n);
  int root_label = vocab.dependency_labels.lookup("root");
  rec.sentence.dep_heads[0] = 0;
  rec.sentence.dep_labels[0] = root_label;
  for (int i = 1; i < n; ++i) {
    rec.sentence.dep_heads[i] = rng.uniform_int(0, i - 1);
    rec.sentence.dep_labels[i] =
        vocab.dependency_labels.lookup(deps[rng.uniform_int(0, static_cast<int>(deps.size()) - 1)]);
  }

  int k = rng.uniform_int(opt.min_objects, opt.max_objects);
  const auto& objects = detail::synth_object_pool();
  const auto& vrel = detail::synth_visual_rel_pool();
  for (int i = 0; i < k; ++i) {
    SceneObject obj;
    obj.label = objects[rng.uniform_int(0, static_cast<int>(objects.size()) - 1)];
    obj.score = rng.uniform(0.05, 1.0);
    rec.scene.objects.push_back(obj);
  }
  int triples = rng.uniform_int(k > 1 ? 1 : 0, std::max(k - 1, 0));
  for (int t = 0; t < triples; ++t) {
    int a = rng.uniform_int(0, k - 1);
    int b = rng.uniform_int(0, k - 1);
    if (a == b) continue;
    rec.scene.relations.push_back(
        {a, vrel[rng.uniform_int(0, static_cast<int>(vrel.size()) - 1)], b});
  }

  int want = rng.uniform_int(0, opt.max_quintuples);
  std::vector<Span> taken;
  for (int q = 0; q < want; ++q) {
    Span s1, s2;
    bool placed = false;
    for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
      int len1 = rng.uniform_int(1, 2), len2 = rng.uniform_int(1, 2);
      if (n < len1 + len2 + 1) break;
      s1.start = rng.uniform_int(0, n - len1);
      s1.end = s1.start + len1 - 1;
      s2.start = rng.uniform_int(0, n - len2);
      s2.end = s2.start + len2 - 1;
      std::vector<Span> probe = taken;
      if (!detail::span_fits(s1, probe)) continue;
      probe.push_back(s1);
      if (!detail::span_fits(s2, probe)) continue;
      placed = true;
    }
    if (!placed) break;
    Quintuple quint;
    quint.e1 = s1;
    quint.e2 = s2;
    quint.t1 = rng.uniform_int(0, vocab.entity_types.size() - 1);
    quint.t2 = rng.uniform_int(0, vocab.entity_types.size() - 1);
    quint.rel = rng.uniform_int(0, vocab.relation_types.size() - 1);
    rec.gold.push_back(canonical(quint));
    taken.push_back(s1);
    taken.push_back(s2);
  }
  std::sort(rec.gold.begin(), rec.gold.end());
  return rec;
}

// Interns every label the synthesizer can emit, so records can reference the
// ids and later corpus loads resolve identically.
inline void register_synth_labels(LabelVocabulary& vocab) {
  vocab.dependency_labels.intern("root");
  for (const auto& p : detail::synth_pos_pool()) vocab.pos_labels.intern(p);
  for (const auto& d : detail::synth_dep_pool()) vocab.dependency_labels.intern(d);
  for (const auto& o : detail::synth_object_pool()) vocab.visual_object_labels.intern(o);
  for (const auto& r : detail::synth_visual_rel_pool()) vocab.visual_relation_labels.intern(r);
}

inline std::vector<Record> synth_corpus(const SynthOptions& opt, LabelVocabulary& vocab) {
  register_synth_labels(vocab);
  std::vector<Record> records;
  records.reserve(opt.records);
  for (int i = 0; i < opt.records; ++i) records.push_back(synth_record(i, opt, vocab));
  return records;
}

// Serializes records back to the line-delimited corpus format, the inverse of
// load_corpus.
inline void write_corpus(const std::vector<Record>& records, const LabelVocabulary& vocab,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write corpus file: " + path);
  for (const Record& rec : records) {
    nlohmann::json j;
    j["id"] = rec.id;
    j["tokens"] = rec.sentence.tokens;
    nlohmann::json pos = nlohmann::json::array();
    for (int p : rec.sentence.pos_tags) pos.push_back(vocab.pos_labels.name(p));
    j["pos"] = std::move(pos);
    j["heads"] = rec.sentence.dep_heads;
    nlohmann::json deps = nlohmann::json::array();
    for (int d : rec.sentence.dep_labels) deps.push_back(vocab.dependency_labels.name(d));
    j["dep_labels"] = std::move(deps);
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : rec.scene.objects) objs.push_back({{"label", o.label}, {"score", o.score}});
    nlohmann::json rels = nlohmann::json::array();
    for (const auto& r : rec.scene.relations)
      rels.push_back(nlohmann::json::array({r.subject, r.label, r.object}));
    j["scene_graph"] = {{"objects", std::move(objs)}, {"relations", std::move(rels)}};
    nlohmann::json gold = nlohmann::json::array();
    for (const auto& q : rec.gold)
      gold.push_back(nlohmann::json::array({q.e1.start, q.e1.end, vocab.entity_types.name(q.t1),
                                            q.e2.start, q.e2.end, vocab.entity_types.name(q.t2),
                                            vocab.relation_types.name(q.rel)}));
    j["gold_quintuples"] = std::move(gold);
    out << j.dump() << "\n";
  }
}

// ── Hand-built separable corpus ──────────────────────────────────────────────

// Six two-token records: a unique subject, an anchor shared by three records,
// and a distinct pos-tag pair per record. Subject and anchor then get
// different attention slabs in every channel (pos sums, tree-distance order,
// co-occurrence counts), so the fused features keep all four grid cells of a
// record apart and a linear head can fit the grids exactly, which
// head-training tests rely on.
inline std::vector<Record> separable_corpus(LabelVocabulary& vocab) {
  const char* names[6] = {"Curry", "Durant", "Kerr", "Ayesha", "Messi", "Federer"};
  const char* anchors[2] = {"Warriors", "Oakland"};
  const char* pos_a[6] = {"NNP", "NN", "JJ", "VB", "RB", "CD"};
  const char* pos_b[6] = {"NNS", "VBD", "VBG", "VBN", "VBZ", "JJR"};
  const char* types[4] = {"PER", "LOC", "ORG", "MISC"};
  const char* rels[6] = {"peer", "member_of", "awarded", "present_in", "couple", "part_of"};

  register_synth_labels(vocab);
  std::vector<Record> records;
  for (int r = 0; r < 6; ++r) {
    Record rec;
    rec.id = "sep-" + std::to_string(r);
    rec.sentence.tokens = {names[r], anchors[r / 3]};
    rec.sentence.pos_tags = {vocab.pos_labels.intern(pos_a[r]),
                             vocab.pos_labels.intern(pos_b[r])};
    rec.sentence.dep_heads = {1, 1};
    rec.sentence.dep_labels = {vocab.dependency_labels.intern("nsubj"),
                               vocab.dependency_labels.intern("root")};
    validate_sentence(rec.sentence, 70, rec.id);

    const auto& pool = detail::synth_object_pool();
    rec.scene.objects.push_back({pool[r % pool.size()], 0.9});
    rec.scene.objects.push_back({pool[(r + 1) % pool.size()], 0.6});
    rec.scene.relations.push_back(
        {0, detail::synth_visual_rel_pool()[r % detail::synth_visual_rel_pool().size()], 1});

    int t1 = vocab.entity_types.lookup(types[r % 4]);
    int t2 = vocab.entity_types.lookup(types[(r + 1) % 4]);
    int rl = vocab.relation_types.lookup(rels[r % 6]);
    rec.gold.push_back(canonical(Quintuple{{0, 0}, t1, {1, 1}, t2, rl}));
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace gale
