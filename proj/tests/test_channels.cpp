#include <catch2/catch_amalgamated.hpp>

#include <gale/channels.hpp>
#include <gale/graph.hpp>
#include <gale/rng.hpp>

#include "oracles.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>

using namespace gale;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Matrix random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  return Matrix::NullaryExpr(rows, cols, [&]() { return rng.uniform(-scale, scale); });
}

TokenizedSentence sentence_with(std::vector<std::string> tokens, std::vector<int> pos,
                                std::vector<int> heads) {
  TokenizedSentence s;
  s.tokens = std::move(tokens);
  s.pos_tags = std::move(pos);
  s.dep_heads = std::move(heads);
  s.dep_labels.assign(s.tokens.size(), 0);
  return s;
}

// random tree over n nodes: parent of i drawn from [0, i)
TokenizedSentence random_tree(Rng& rng, int n) {
  std::vector<int> heads(n);
  heads[0] = 0;
  for (int i = 1; i < n; ++i) heads[i] = rng.uniform_int(0, i - 1);
  std::vector<std::string> tokens;
  std::vector<int> pos(n, 0);
  for (int i = 0; i < n; ++i) tokens.push_back(strf("t%d", i));
  return sentence_with(std::move(tokens), std::move(pos), std::move(heads));
}

struct StringSentence {
  std::vector<std::string> tokens;
};

}  // namespace

TEST_CASE("pos channel sums the inclusive tag range") {
  Rng rng(41);
  Matrix table = random_matrix(rng, 3, 5);
  TokenizedSentence s = sentence_with({"a", "b", "c"}, {2, 0, 1}, {1, 1, 1});
  Tensor3 r = build_pos_channel(s, table);
  CHECK(r.at(0, 0) == table.row(2).transpose());
  CHECK(r.at(1, 1) == table.row(0).transpose());
  // (0, 2) covers all three tokens
  Vector direct = (table.row(2) + table.row(0) + table.row(1)).transpose();
  CHECK((r.at(0, 2) - direct).cwiseAbs().maxCoeff() < 1e-12);
  // symmetric range convention
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(r.at(i, j) == r.at(j, i));
}

TEST_CASE("pos channel grows by one tag vector per range extension") {
  Rng rng(42);
  Matrix table = random_matrix(rng, 4, 6);
  int n = 9;
  TokenizedSentence s = random_tree(rng, n);
  for (int i = 0; i < n; ++i) s.pos_tags[i] = rng.uniform_int(0, 3);
  Tensor3 r = build_pos_channel(s, table);
  for (int i = 0; i < n; ++i)
    for (int j = i; j + 1 < n; ++j) {
      Vector grown = r.at(i, j) + table.row(s.pos_tags[j + 1]).transpose();
      CHECK((r.at(i, j + 1) - grown).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("pos channel rejects tags outside the table") {
  Matrix table = Matrix::Zero(2, 4);
  TokenizedSentence s = sentence_with({"a", "b"}, {0, 5}, {0, 0});
  CHECK_THROWS_AS(build_pos_channel(s, table), config_error);
}

TEST_CASE("syntactic distances: adjacency means one hop") {
  TokenizedSentence s = sentence_with({"a", "b", "c"}, {0, 0, 0}, {1, 1, 1});
  IntMatrix sd = build_sd_matrix(build_textual_graph(s));
  CHECK(sd(0, 0) == 0);
  CHECK(sd(0, 1) == 1);
  CHECK(sd(1, 2) == 1);
  CHECK(sd(0, 2) == 2);
}

// Eight-token sentence where the first and last tokens both modify token 1:
// linearly seven apart, two dependency hops apart.
TEST_CASE("syntactic distance can shortcut a long linear offset") {
  TokenizedSentence s = sentence_with({"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"},
                                      std::vector<int>(8, 0), {1, 1, 3, 1, 6, 6, 7, 1});
  IntMatrix sd = build_sd_matrix(build_textual_graph(s));
  CHECK(7 - 0 == 7);
  CHECK(sd(0, 7) == 2);
  CHECK(sd(7, 0) == 2);
}

TEST_CASE("syntactic distances match the all-pairs oracle on random trees") {
  Rng rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    int n = rng.uniform_int(2, 12);
    TokenizedSentence s = random_tree(rng, n);
    TextualGraph g = build_textual_graph(s);
    IntMatrix sd = build_sd_matrix(g);
    IntMatrix adjacency = g.adjacency;
    for (int i = 0; i < n; ++i) adjacency(i, i) = 0;  // oracle takes loop-free input
    CHECK(sd == oracles::floyd_warshall(adjacency));
    CHECK(sd == sd.transpose().eval());
    for (int i = 0; i < n; ++i) CHECK(sd(i, i) == 0);
    // tree metric triangle inequality
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) CHECK(sd(a, c) <= sd(a, b) + sd(b, c));
  }
}

TEST_CASE("disconnected graphs are rejected by the distance builder") {
  TextualGraph g;
  g.n = 2;
  g.adjacency = IntMatrix::Identity(2, 2);
  g.edge_labels = IntMatrix::Constant(2, 2, kNoEdge);
  g.edge_labels(0, 0) = g.edge_labels(1, 1) = 0;
  CHECK_THROWS_WITH(build_sd_matrix(g), ContainsSubstring("disconnected"));
}

TEST_CASE("pmi statistics count sentence-level occurrences") {
  // 8 sentences; "a" and "b" only co-occur in the first
  std::vector<StringSentence> corpus;
  corpus.push_back({{"a", "b"}});
  for (int i = 0; i < 7; ++i) corpus.push_back({{"x", strf("y%d", i)}});
  PmiStats stats = build_pmi_stats(corpus);
  CHECK(stats.sentences == 8);
  CHECK(stats.count("a") == 1);
  CHECK(stats.count("x") == 7);
  CHECK(stats.count("a", "b") == 1);
  CHECK(stats.count("b", "a") == 1);
  CHECK(stats.count("a", "x") == 0);
  // each appears once, always together: pmi = log N
  CHECK(stats.pmi("a", "b") == Catch::Approx(std::log(8.0)).margin(1e-12));
  CHECK(stats.pmi("a", "b") ==
        Catch::Approx(oracles::pmi_by_counting({{"a", "b"},
                                                {"x", "y0"},
                                                {"x", "y1"},
                                                {"x", "y2"},
                                                {"x", "y3"},
                                                {"x", "y4"},
                                                {"x", "y5"},
                                                {"x", "y6"}},
                                               "a", "b"))
            .margin(1e-12));
  // diagonal convention: count(a, a) = count(a)
  CHECK(stats.count("a", "a") == 1);
  CHECK(stats.pmi("a", "a") == Catch::Approx(-std::log(1.0 / 8.0)).margin(1e-12));
  // duplicated tokens in one sentence count once
  PmiStats dup = build_pmi_stats(std::vector<StringSentence>{{{"a", "a", "b"}}});
  CHECK(dup.count("a") == 1);
}

TEST_CASE("co-occurrence matrix applies ceil, cap, and the negative clamp") {
  std::vector<StringSentence> corpus;
  corpus.push_back({{"a", "b", "q"}});
  for (int i = 0; i < 3; ++i) corpus.push_back({{"q", "r"}});
  for (int i = 0; i < 4; ++i) corpus.push_back({{"pad", strf("p%d", i)}});
  // N = 8; a,b: pmi = log 8 = 2.08 -> ceil 3; q,r: pmi = log(3*8/(4*3)) = log 2 -> ceil 1
  // q appears with a but also 3 times elsewhere: pmi(a, q) = log(8/4) = log 2 -> 1
  PmiStats stats = build_pmi_stats(corpus);

  TokenizedSentence s = sentence_with({"a", "b", "q", "zzz"}, {0, 0, 0, 0}, {1, 1, 1, 1});
  IntMatrix m = build_co_matrix(s, stats);
  CHECK(m(0, 1) == 3);
  CHECK(m(1, 0) == 3);
  CHECK(m(0, 2) == 1);
  CHECK(m(0, 3) == -1);  // unseen token type
  CHECK(m(3, 3) == -1);
  CHECK(m(0, 0) == 3);  // -log(1/8) on the diagonal, ceil

  IntMatrix capped = build_co_matrix(s, stats, 2);
  CHECK(capped(0, 1) == 2);
  CHECK(capped(0, 2) == 1);

  // never co-occurring but both present
  TokenizedSentence t = sentence_with({"a", "r"}, {0, 0}, {1, 1});
  IntMatrix mt = build_co_matrix(t, stats);
  CHECK(mt(0, 1) == -1);
}

TEST_CASE("pmi statistics are invariant under corpus order") {
  Rng rng(44);
  std::vector<StringSentence> corpus;
  for (int i = 0; i < 12; ++i) {
    StringSentence s;
    int len = rng.uniform_int(2, 6);
    for (int t = 0; t < len; ++t) s.tokens.push_back(strf("w%d", rng.uniform_int(0, 9)));
    corpus.push_back(std::move(s));
  }
  std::vector<StringSentence> shuffled = corpus;
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[0], shuffled[5]);
  PmiStats a = build_pmi_stats(corpus);
  PmiStats b = build_pmi_stats(shuffled);
  CHECK(a.sentences == b.sentences);
  CHECK(a.token_counts == b.token_counts);
  CHECK(a.pair_counts == b.pair_counts);
}

TEST_CASE("pmi statistics cache round-trips") {
  std::vector<StringSentence> corpus = {{{"a", "b"}}, {{"b", "c"}}, {{"a"}}};
  PmiStats stats = build_pmi_stats(corpus);
  std::string path = temp_path("gale_pmi_cache.tsv");
  save_pmi_stats(stats, path);
  PmiStats back = load_pmi_stats(path);
  CHECK(back.sentences == stats.sentences);
  CHECK(back.token_counts == stats.token_counts);
  CHECK(back.pair_counts == stats.pair_counts);
  std::remove(path.c_str());

  std::string empty = temp_path("gale_pmi_empty.tsv");
  { std::ofstream out(empty); }
  CHECK_THROWS_AS(load_pmi_stats(empty), input_error);
  CHECK_THROWS_AS(load_pmi_stats(temp_path("gale_pmi_absent.tsv")), input_error);
  std::remove(empty.c_str());
}

TEST_CASE("empty corpora cannot seed the statistics") {
  CHECK_THROWS_AS(build_pmi_stats(std::vector<StringSentence>{}), input_error);
}

TEST_CASE("integer channel embedding maps values through the table") {
  Rng rng(45);
  Matrix table = random_matrix(rng, 5, 3);  // rows for values -1..3 at offset 1
  IntMatrix m(2, 2);
  m << -1, 0, 2, 3;
  Tensor3 r = embed_integer_matrix(m, table, 1);
  CHECK(r.at(0, 0) == table.row(0).transpose());
  CHECK(r.at(0, 1) == table.row(1).transpose());
  CHECK(r.at(1, 0) == table.row(3).transpose());
  CHECK(r.at(1, 1) == table.row(4).transpose());

  IntMatrix out_of_range(1, 1);
  out_of_range << 5;
  CHECK_THROWS_AS(embed_integer_matrix(out_of_range, table, 1), config_error);
  out_of_range << -2;
  CHECK_THROWS_AS(embed_integer_matrix(out_of_range, table, 1), config_error);
}

TEST_CASE("w-gcn over one word keeps its projected state") {
  Rng rng(46);
  WgcnParams p = WgcnParams::init(rng, 4, 6);
  Matrix o = random_matrix(rng, 1, 6);
  Tensor3 r(1, 1, 4);
  Vector feat(4);
  feat << 1, -2, 0.5, 3;
  r.set(0, 0, feat);
  WgcnResult res = w_gcn(r, o, p);
  CHECK(res.weights(0, 0) == 1.0);
  CHECK((res.states.row(0) - o.row(0) * p.w_r2.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("w-gcn with zero scores averages uniformly") {
  Rng rng(47);
  int n = 5, d = 8;
  WgcnParams p = WgcnParams::init(rng, 3, d);
  p.w_r1 = Vector::Zero(3);
  p.b = 0.0;
  Matrix o = random_matrix(rng, n, d);
  Tensor3 r(n, n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vector v(3);
      v << rng.uniform01(), rng.uniform01(), rng.uniform01();
      r.set(i, j, v);
    }
  WgcnResult res = w_gcn(r, o, p);
  Matrix projected = o * p.w_r2.transpose();
  RowVector mean = projected.colwise().mean();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) CHECK(res.weights(i, j) == Catch::Approx(0.2).margin(1e-15));
    CHECK((res.states.row(i) - mean).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("w-gcn weights are distributions and permutation-equivariant") {
  Rng rng(48);
  int n = 6, d = 7, d_l = 4;
  WgcnParams p = WgcnParams::init(rng, d_l, d);
  Matrix o = random_matrix(rng, n, d);
  Tensor3 r(n, n, d_l);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vector v(d_l);
      for (int t = 0; t < d_l; ++t) v(t) = rng.uniform(-2.0, 2.0);
      r.set(i, j, v);
    }
  WgcnResult res = w_gcn(r, o, p);
  for (int i = 0; i < n; ++i) {
    CHECK(res.weights.row(i).sum() == Catch::Approx(1.0).margin(1e-12));
    CHECK(res.weights.row(i).minCoeff() >= 0.0);
  }

  std::vector<int> perm = {4, 2, 0, 5, 1, 3};
  Matrix op(n, d);
  Tensor3 rp(n, n, d_l);
  for (int i = 0; i < n; ++i) {
    op.row(i) = o.row(perm[i]);
    for (int j = 0; j < n; ++j) rp.set(i, j, r.at(perm[i], perm[j]));
  }
  WgcnResult pres = w_gcn(rp, op, p);
  for (int i = 0; i < n; ++i)
    CHECK((pres.states.row(i) - res.states.row(perm[i])).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("w-gcn validates shapes") {
  Rng rng(49);
  WgcnParams p = WgcnParams::init(rng, 4, 6);
  Matrix o = random_matrix(rng, 3, 6);
  Tensor3 square(3, 3, 5);  // wrong depth
  CHECK_THROWS_AS(w_gcn(square, o, p), config_error);
  Tensor3 rect(2, 3, 4);
  CHECK_THROWS_AS(w_gcn(rect, o, p), config_error);
}

TEST_CASE("channel fusion concatenates then projects") {
  Rng rng(50);
  int n = 4, d = 5;
  Matrix s_pos = random_matrix(rng, n, d);
  Matrix s_sd = random_matrix(rng, n, d);
  Matrix s_co = random_matrix(rng, n, d);

  // selecting the first block reproduces the Pos channel
  FusionParams pick;
  pick.w = Matrix::Zero(d, 3 * d);
  pick.w.block(0, 0, d, d) = Matrix::Identity(d, d);
  pick.b = Vector::Zero(d);
  CHECK((fuse_channels(s_pos, s_sd, s_co, pick) - s_pos).cwiseAbs().maxCoeff() < 1e-15);

  // zero weights leave only the bias
  FusionParams zero;
  zero.w = Matrix::Zero(d, 3 * d);
  zero.b = Vector::Constant(d, 1.5);
  Matrix out = fuse_channels(s_pos, s_sd, s_co, zero);
  CHECK(out == Matrix::Constant(n, d, 1.5));

  FusionParams real = FusionParams::init(rng, d);
  Matrix fused = fuse_channels(s_pos, s_sd, s_co, real);
  CHECK(fused.rows() == n);
  CHECK(fused.cols() == d);

  Matrix short_rows = random_matrix(rng, n - 1, d);
  CHECK_THROWS_AS(fuse_channels(short_rows, s_sd, s_co, real), config_error);
  CHECK_THROWS_AS(fuse_channels(s_pos, s_sd, random_matrix(rng, n, d + 1), real), config_error);
}

TEST_CASE("distance and co-occurrence caps are the documented defaults") {
  CHECK(kSdCap == 32);
  CHECK(kCoCap == 16);
}
