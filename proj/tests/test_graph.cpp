#include <catch2/catch_amalgamated.hpp>

#include <gale/corpus.hpp>
#include <gale/embedding.hpp>
#include <gale/graph.hpp>
#include <gale/synth.hpp>
#include <gale/vocab.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace gale;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string write_temp(const char* name, const std::string& content) {
  std::string path = temp_path(name);
  std::ofstream out(path);
  out << content;
  return path;
}

TokenizedSentence chain_sentence(int n) {
  TokenizedSentence s;
  for (int i = 0; i < n; ++i) {
    s.tokens.push_back(strf("w%d", i));
    s.pos_tags.push_back(0);
    s.dep_heads.push_back(i == 0 ? 0 : i - 1);
    s.dep_labels.push_back(0);
  }
  return s;
}

}  // namespace

TEST_CASE("label table interning is idempotent") {
  LabelTable t;
  CHECK(t.intern("peer") == 0);
  CHECK(t.intern("member_of") == 1);
  CHECK(t.intern("peer") == 0);
  CHECK(t.lookup("peer") == 0);
  CHECK(t.lookup("absent") == -1);
  CHECK(t.name(1) == "member_of");
  CHECK(t.size() == 2);
}

TEST_CASE("default vocabulary tag space layout") {
  LabelVocabulary v = LabelVocabulary::defaults();
  CHECK(v.entity_types.size() == 4);
  CHECK(v.relation_types.size() == 6);
  CHECK(v.tag_count() == 11);
  CHECK(v.tag_name(0) == "N");
  int per = v.entity_types.lookup("PER");
  CHECK(v.entity_tag(per) == 1 + per);
  CHECK(v.is_entity_tag(v.entity_tag(per)));
  CHECK_FALSE(v.is_relation_tag(v.entity_tag(per)));
  int peer = v.relation_types.lookup("peer");
  int peer_tag = v.relation_tag(peer);
  CHECK(v.is_relation_tag(peer_tag));
  CHECK(v.relation_type_of_tag(peer_tag) == peer);
  CHECK(v.tag_name(peer_tag) == "peer");
  // self label reserved in both edge vocabularies at id 0
  CHECK(v.dependency_labels.lookup(kSelfEdgeLabel) == 0);
  CHECK(v.visual_relation_labels.lookup(kSelfEdgeLabel) == 0);
}

TEST_CASE("vocabulary file parsing") {
  std::string path = write_temp("gale_vocab.txt",
                                "# comment\n"
                                "[entity_types]\n"
                                "PER\nLOC\n"
                                "\n"
                                "[relation_types]\n"
                                "peer\nawarded\n");
  LabelVocabulary v = load_vocabulary(path);
  CHECK(v.entity_types.size() == 2);
  CHECK(v.relation_types.size() == 2);
  CHECK(v.relation_types.lookup("awarded") == 1);

  std::string dup = write_temp("gale_vocab_dup.txt", "[entity_types]\nPER\nPER\n");
  CHECK_THROWS_AS(load_vocabulary(dup), input_error);
  std::remove(path.c_str());
  std::remove(dup.c_str());
}

TEST_CASE("sentence validation accepts a minimal record and names violations") {
  TokenizedSentence s;
  s.tokens = {"a", "b", "c"};
  s.pos_tags = {0, 0, 0};
  s.dep_heads = {1, 1, 1};
  s.dep_labels = {0, 0, 0};
  CHECK_NOTHROW(validate_sentence(s, 70, "t"));

  TokenizedSentence two_roots = s;
  two_roots.dep_heads = {0, 1, 0};
  CHECK_THROWS_WITH(validate_sentence(two_roots, 70, "t"), ContainsSubstring("multiple roots"));

  TokenizedSentence no_root = s;
  no_root.dep_heads = {1, 2, 1};
  CHECK_THROWS_WITH(validate_sentence(no_root, 70, "t"), ContainsSubstring("no root"));

  TokenizedSentence mismatch = s;
  mismatch.pos_tags = {0, 0};
  CHECK_THROWS_WITH(validate_sentence(mismatch, 70, "t"), ContainsSubstring("length mismatch"));

  TokenizedSentence oob = s;
  oob.dep_heads = {1, 1, 5};
  CHECK_THROWS_AS(validate_sentence(oob, 70, "t"), input_error);

  CHECK_THROWS_WITH(validate_sentence(s, 2, "t"), ContainsSubstring("max is 2"));

  TokenizedSentence empty;
  CHECK_THROWS_AS(validate_sentence(empty, 70, "t"), input_error);
}

TEST_CASE("textual graph of a two-token sentence is fully connected") {
  TokenizedSentence s;
  s.tokens = {"a", "b"};
  s.pos_tags = {0, 0};
  s.dep_heads = {0, 0};
  s.dep_labels = {0, 3};
  TextualGraph g = build_textual_graph(s);
  IntMatrix want(2, 2);
  want << 1, 1, 1, 1;
  CHECK(g.adjacency == want);
  CHECK(g.edge_labels(0, 0) == 0);
  CHECK(g.edge_labels(1, 1) == 0);
  CHECK(g.edge_labels(0, 1) == 3);  // dependent's arc label, mirrored
  CHECK(g.edge_labels(1, 0) == 3);
}

TEST_CASE("textual graph of a single token is a self-loop") {
  TokenizedSentence s;
  s.tokens = {"a"};
  s.pos_tags = {0};
  s.dep_heads = {0};
  s.dep_labels = {0};
  TextualGraph g = build_textual_graph(s);
  CHECK(g.adjacency.rows() == 1);
  CHECK(g.adjacency(0, 0) == 1);
  CHECK(g.edge_labels(0, 0) == 0);
}

TEST_CASE("textual graph is symmetric with unit diagonal and masked labels") {
  TokenizedSentence s = chain_sentence(9);
  s.dep_heads = {3, 0, 1, 3, 3, 4, 5, 6, 5};
  TextualGraph g = build_textual_graph(s);
  CHECK(g.adjacency == g.adjacency.transpose().eval());
  for (int i = 0; i < g.n; ++i) CHECK(g.adjacency(i, i) == 1);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      if (g.adjacency(i, j))
        CHECK(g.edge_labels(i, j) >= 0);
      else
        CHECK(g.edge_labels(i, j) == kNoEdge);
    }
}

// Two tokens eight positions apart can sit two dependency hops apart.
TEST_CASE("linear offset and tree distance disagree") {
  TokenizedSentence s = chain_sentence(8);
  s.dep_heads = {1, 1, 3, 1, 6, 6, 7, 1};
  TextualGraph g = build_textual_graph(s);
  CHECK(g.adjacency(0, 7) == 0);  // far apart linearly and not directly linked
  CHECK(g.adjacency(0, 1) == 1);
  CHECK(g.adjacency(7, 1) == 1);  // but both attach to token 1
}

TEST_CASE("scene graph keeps the highest-scoring objects") {
  SceneGraph scene;
  for (int i = 0; i < 12; ++i)
    scene.objects.push_back(SceneObject{strf("o%d", i), 0.05 * (i + 1)});
  scene.relations.push_back(SceneRelation{11, "near", 10});
  scene.relations.push_back(SceneRelation{0, "near", 11});  // object 0 gets dropped
  LabelTable objects, rels;
  rels.intern(kSelfEdgeLabel);
  VisualGraph g = build_visual_graph(scene, 10, objects, rels, "t");
  CHECK(g.k == 10);
  for (int i = 0; i + 1 < g.k; ++i) CHECK(g.object_scores[i] >= g.object_scores[i + 1]);
  CHECK(g.object_names[0] == "o11");
  CHECK(g.object_names[9] == "o2");
  // the triple between the two survivors is kept, remapped to sorted positions
  CHECK(g.adjacency(0, 1) == 1);
  CHECK(g.adjacency(1, 0) == 1);
  CHECK(g.edge_labels(0, 1) == rels.lookup("near"));
  // the triple touching dropped object 0 is discarded: row 0 has one neighbor
  int neighbors = 0;
  for (int j = 0; j < g.k; ++j) neighbors += g.adjacency(0, j);
  CHECK(neighbors == 2);  // self plus o10
}

TEST_CASE("two-object scene with one relation") {
  SceneGraph scene;
  scene.objects = {SceneObject{"person", 0.9}, SceneObject{"ball", 0.7}};
  scene.relations = {SceneRelation{0, "near", 1}};
  LabelTable objects, rels;
  rels.intern(kSelfEdgeLabel);
  VisualGraph g = build_visual_graph(scene, 10, objects, rels, "t");
  IntMatrix want(2, 2);
  want << 1, 1, 1, 1;
  CHECK(g.adjacency == want);
  CHECK(g.edge_labels(0, 1) == rels.lookup("near"));
  CHECK(g.edge_labels(1, 0) == rels.lookup("near"));
  CHECK(g.edge_labels(0, 0) == 0);
  CHECK(g.object_labels[0] == objects.lookup("person"));
}

TEST_CASE("scene graph rejects bad indices and empty scenes") {
  SceneGraph scene;
  scene.objects = {SceneObject{"a", 0.5}, SceneObject{"b", 0.4}, SceneObject{"c", 0.3}};
  scene.relations = {SceneRelation{0, "holding", 5}};
  LabelTable objects, rels;
  rels.intern(kSelfEdgeLabel);
  CHECK_THROWS_AS(build_visual_graph(scene, 10, objects, rels, "t"), input_error);

  SceneGraph empty;
  CHECK_THROWS_WITH(build_visual_graph(empty, 10, objects, rels, "t"),
                    ContainsSubstring("empty scene graph"));
}

TEST_CASE("corpus loading parses records and interns labels") {
  LabelVocabulary v = LabelVocabulary::defaults();
  std::string path = write_temp(
      "gale_corpus_ok.jsonl",
      R"({"id":"r1","tokens":["Curry","greets","Thompson"],"pos":["NNP","VBZ","NNP"],)"
      R"("heads":[1,1,1],"dep_labels":["nsubj","root","obj"],)"
      R"("scene_graph":{"objects":[{"label":"person","score":0.9},{"label":"ball","score":0.5}],)"
      R"("relations":[[0,"near",1]]},)"
      R"("gold_quintuples":[[0,0,"PER",2,2,"PER","peer"]]})"
      "\n");
  std::vector<Record> recs = load_corpus(path, v, 70);
  REQUIRE(recs.size() == 1);
  const Record& r = recs[0];
  CHECK(r.id == "r1");
  CHECK(r.sentence.tokens == std::vector<std::string>{"Curry", "greets", "Thompson"});
  CHECK(r.sentence.pos_tags[0] == v.pos_labels.lookup("NNP"));
  CHECK(r.sentence.dep_labels[1] == v.dependency_labels.lookup("root"));
  REQUIRE(r.gold.size() == 1);
  CHECK(r.gold[0].e1 == Span{0, 0});
  CHECK(r.gold[0].e2 == Span{2, 2});
  CHECK(r.gold[0].t1 == v.entity_types.lookup("PER"));
  CHECK(r.gold[0].rel == v.relation_types.lookup("peer"));
  CHECK(r.scene.objects.size() == 2);
  CHECK(v.visual_object_labels.lookup("person") >= 0);
  CHECK(v.visual_relation_labels.lookup("near") >= 1);
  std::remove(path.c_str());
}

TEST_CASE("corpus loading reports the offending line") {
  LabelVocabulary v = LabelVocabulary::defaults();
  std::string path = write_temp(
      "gale_corpus_bad.jsonl",
      R"({"id":"a","tokens":["x"],"pos":["NN"],"heads":[0],"dep_labels":["root"],)"
      R"("scene_graph":{"objects":[{"label":"o","score":1.0}],"relations":[]},"gold_quintuples":[]})"
      "\n"
      R"({"id":"b","tokens":["x","y"],"pos":["NN","NN"],"heads":[0],"dep_labels":["root","a"],)"
      R"("scene_graph":{"objects":[{"label":"o","score":1.0}],"relations":[]},"gold_quintuples":[]})"
      "\n");
  CHECK_THROWS_WITH(load_corpus(path, v, 70), ContainsSubstring(":2 (record b)"));

  std::string missing = write_temp("gale_corpus_missing.jsonl", R"({"id":"a","tokens":["x"]})"
                                                                "\n");
  CHECK_THROWS_AS(load_corpus(missing, v, 70), input_error);

  std::string unparsable = write_temp("gale_corpus_syntax.jsonl", "{nope\n");
  CHECK_THROWS_WITH(load_corpus(unparsable, v, 70), ContainsSubstring(":1"));

  CHECK_THROWS_AS(load_corpus(temp_path("gale_corpus_absent.jsonl"), v, 70), input_error);
  std::remove(path.c_str());
  std::remove(missing.c_str());
  std::remove(unparsable.c_str());
}

TEST_CASE("empty corpus file loads as an empty list") {
  LabelVocabulary v = LabelVocabulary::defaults();
  std::string path = write_temp("gale_corpus_empty.jsonl", "");
  CHECK(load_corpus(path, v, 70).empty());
  std::remove(path.c_str());
}

TEST_CASE("unknown entity or relation names are rejected") {
  LabelVocabulary v = LabelVocabulary::defaults();
  std::string path = write_temp(
      "gale_corpus_badtype.jsonl",
      R"({"id":"a","tokens":["x","y","z"],"pos":["NN","NN","NN"],"heads":[1,1,1],)"
      R"("dep_labels":["a","root","b"],)"
      R"("scene_graph":{"objects":[{"label":"o","score":1.0}],"relations":[]},)"
      R"("gold_quintuples":[[0,0,"DRAGON",2,2,"PER","peer"]]})"
      "\n");
  CHECK_THROWS_WITH(load_corpus(path, v, 70), ContainsSubstring("DRAGON"));
  std::remove(path.c_str());
}

TEST_CASE("reserved self label cannot appear in input") {
  LabelVocabulary v = LabelVocabulary::defaults();
  std::string path = write_temp(
      "gale_corpus_self.jsonl",
      R"({"id":"a","tokens":["x","y"],"pos":["NN","NN"],"heads":[1,1],)"
      R"("dep_labels":["<self>","root"],)"
      R"("scene_graph":{"objects":[{"label":"o","score":1.0}],"relations":[]},)"
      R"("gold_quintuples":[]})"
      "\n");
  CHECK_THROWS_WITH(load_corpus(path, v, 70), ContainsSubstring("<self>"));
  std::remove(path.c_str());
}

TEST_CASE("hashed embeddings are reproducible and distinct") {
  Vector a = hashed_embedding("Curry", 7, 8);
  Vector b = hashed_embedding("Curry", 7, 8);
  CHECK(a == b);
  CHECK(a.size() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(a(i) >= -1.0);
    CHECK(a(i) < 1.0);
  }
  CHECK(hashed_embedding("Curry", 8, 8) != a);       // seed matters
  CHECK(hashed_embedding("Thompson", 7, 8) != a);    // key matters

  // no collisions across the synthetic word pool
  const auto& pool = detail::synth_word_pool();
  for (size_t i = 0; i < pool.size(); ++i)
    for (size_t j = i + 1; j < pool.size(); ++j)
      CHECK(hashed_embedding(pool[i], 7, 16) != hashed_embedding(pool[j], 7, 16));
}

TEST_CASE("token embedding shapes and file-source lookups") {
  TokenizedSentence s;
  s.tokens = {"a", "b"};
  s.pos_tags = {0, 0};
  s.dep_heads = {0, 0};
  s.dep_labels = {0, 0};

  Matrix hashed = embed_tokens(s, EmbeddingSource::hashed(3), 16, "rec");
  CHECK(hashed.rows() == 2);
  CHECK(hashed.cols() == 16);
  CHECK(hashed.row(0).transpose() == hashed_embedding("a", 3, 16));

  EmbeddingFile file;
  file.tokens["rec"] = Matrix::Ones(2, 16);
  Matrix from_file = embed_tokens(s, EmbeddingSource::from_file(file), 16, "rec");
  CHECK(from_file == Matrix::Ones(2, 16));

  CHECK_THROWS_WITH(embed_tokens(s, EmbeddingSource::from_file(file), 16, "other"),
                    ContainsSubstring("missing embedding: other"));
  EmbeddingFile wrong;
  wrong.tokens["rec"] = Matrix::Ones(3, 16);
  CHECK_THROWS_AS(embed_tokens(s, EmbeddingSource::from_file(wrong), 16, "rec"), input_error);
}

TEST_CASE("edge embedding covers exactly the adjacency support") {
  TokenizedSentence s = chain_sentence(5);
  TextualGraph g = build_textual_graph(s);
  Rng rng(9);
  EdgeTable table = EdgeTable::init(4, 6, rng);
  Tensor3 z = embed_edges(g, table);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      if (g.adjacency(i, j)) {
        CHECK(z.at(i, j) == table.vectors.row(g.edge_labels(i, j)).transpose());
      } else {
        CHECK(z.at(i, j).norm() == 0.0);
      }
    }
  // same label, same vector
  CHECK(z.at(0, 1) == z.at(1, 2));  // chain arcs share dep label 0
  CHECK(z.at(0, 0) == z.at(4, 4));  // self label everywhere on the diagonal
}

TEST_CASE("edge embedding rejects labels outside the table") {
  TokenizedSentence s = chain_sentence(2);
  s.dep_labels = {0, 9};
  TextualGraph g = build_textual_graph(s);
  Rng rng(9);
  EdgeTable table = EdgeTable::init(3, 4, rng);
  CHECK_THROWS_AS(embed_edges(g, table), input_error);
}

TEST_CASE("synthetic corpus round-trips through the record format") {
  LabelVocabulary v = LabelVocabulary::defaults();
  SynthOptions opt;
  opt.records = 6;
  opt.max_tokens = 20;
  opt.seed = 31;
  std::vector<Record> recs = synth_corpus(opt, v);
  REQUIRE(recs.size() == 6);
  for (const Record& r : recs) {
    CHECK(r.sentence.size() >= opt.min_tokens);
    CHECK(r.sentence.size() <= opt.max_tokens);
    CHECK_NOTHROW(validate_sentence(r.sentence, opt.max_tokens, r.id));
    CHECK(static_cast<int>(r.scene.objects.size()) >= opt.min_objects);
    for (const Quintuple& q : r.gold) CHECK_NOTHROW(validate_quintuple(q, r.sentence.size(), r.id));
  }

  std::string path = temp_path("gale_synth_roundtrip.jsonl");
  write_corpus(recs, v, path);
  LabelVocabulary v2 = LabelVocabulary::defaults();
  std::vector<Record> back = load_corpus(path, v2, opt.max_tokens);
  REQUIRE(back.size() == recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].id == recs[i].id);
    CHECK(back[i].sentence.tokens == recs[i].sentence.tokens);
    CHECK(back[i].sentence.dep_heads == recs[i].sentence.dep_heads);
    CHECK(back[i].gold == recs[i].gold);
    CHECK(back[i].scene.objects.size() == recs[i].scene.objects.size());
    for (size_t o = 0; o < recs[i].scene.objects.size(); ++o) {
      CHECK(back[i].scene.objects[o].label == recs[i].scene.objects[o].label);
      CHECK(back[i].scene.objects[o].score == recs[i].scene.objects[o].score);
    }
  }
  // determinism of the generator itself
  LabelVocabulary v3 = LabelVocabulary::defaults();
  std::vector<Record> again = synth_corpus(opt, v3);
  REQUIRE(again.size() == recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(again[i].sentence.tokens == recs[i].sentence.tokens);
    CHECK(again[i].gold == recs[i].gold);
  }
  std::remove(path.c_str());
}

TEST_CASE("scene graph file loading") {
  std::string path = write_temp(
      "gale_scene.json",
      R"({"objects":[{"label":"person","score":0.9},{"label":"ball","score":0.5}],)"
      R"("relations":[[0,"holding",1]]})");
  SceneGraph scene = load_scene_graph(path);
  CHECK(scene.objects.size() == 2);
  CHECK(scene.objects[1].label == "ball");
  REQUIRE(scene.relations.size() == 1);
  CHECK(scene.relations[0].label == "holding");
  std::remove(path.c_str());
}
