#pragma once

#include "gale/attention.hpp"
#include "gale/channels.hpp"
#include "gale/checkpoint.hpp"
#include "gale/common.hpp"
#include "gale/corpus.hpp"
#include "gale/embedding.hpp"
#include "gale/graph.hpp"
#include "gale/ot.hpp"
#include "gale/rng.hpp"
#include "gale/tagging.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace gale {

// ── Configuration ────────────────────────────────────────────────────────────

struct PipelineConfig {
  int d_t = 768;   // token representation width
  int d_i = 4096;  // raw visual feature width
  int d_z = 100;   // edge vector width
  int d_l = 100;   // channel vector width
  int max_tokens = 70;
  int max_objects = 10;
  int sinkhorn_inner = 20;
  int sinkhorn_outer = 5;
  double epsilon = 0.1;
  double alpha = 0.4;
  double lambda = 0.6;
  int heads = 8;
  uint64_t seed = 0;
  double learning_rate = 2e-5;
  double lr_decay = 0.5;
  int patience = 5;
  int epochs = 50;
  int sd_cap = kSdCap;
  int co_cap = kCoCap;

  void validate() const {
    auto positive = [](int v, const char* field) {
      if (v <= 0) throw config_error(strf("%s must be positive, got %d", field, v));
    };
    positive(d_t, "d_t");
    positive(d_i, "d_i");
    positive(d_z, "d_z");
    positive(d_l, "d_l");
    positive(max_tokens, "max_tokens");
    positive(max_objects, "max_objects");
    positive(sinkhorn_inner, "sinkhorn_inner");
    positive(sinkhorn_outer, "sinkhorn_outer");
    positive(heads, "heads");
    positive(patience, "patience");
    positive(epochs, "epochs");
    positive(sd_cap, "sd_cap");
    positive(co_cap, "co_cap");
    if (epsilon <= 0.0) throw config_error(strf("epsilon must be positive, got %.12g", epsilon));
    if (alpha < 0.0 || alpha > 1.0)
      throw config_error(strf("alpha must lie in [0, 1], got %.12g", alpha));
    if (lambda < 0.0) throw config_error(strf("lambda must be non-negative, got %.12g", lambda));
    if (d_t % heads != 0)
      throw config_error(strf("heads (%d) must divide d_t (%d)", heads, d_t));
    if (learning_rate < 0.0)
      throw config_error(strf("learning_rate must be non-negative, got %.12g", learning_rate));
    if (lr_decay <= 0.0 || lr_decay > 1.0)
      throw config_error(strf("lr_decay must lie in (0, 1], got %.12g", lr_decay));
  }
};

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "d_t") c.d_t = value.get<int>();
      else if (key == "d_i") c.d_i = value.get<int>();
      else if (key == "d_z") c.d_z = value.get<int>();
      else if (key == "d_l") c.d_l = value.get<int>();
      else if (key == "max_tokens") c.max_tokens = value.get<int>();
      else if (key == "max_objects") c.max_objects = value.get<int>();
      else if (key == "sinkhorn_inner") c.sinkhorn_inner = value.get<int>();
      else if (key == "sinkhorn_outer") c.sinkhorn_outer = value.get<int>();
      else if (key == "epsilon") c.epsilon = value.get<double>();
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "lambda") c.lambda = value.get<double>();
      else if (key == "heads") c.heads = value.get<int>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "lr_decay") c.lr_decay = value.get<double>();
      else if (key == "patience") c.patience = value.get<int>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "sd_cap") c.sd_cap = value.get<int>();
      else if (key == "co_cap") c.co_cap = value.get<int>();
      else throw config_error("unknown config field \"" + key + "\"");
    } catch (const nlohmann::json::exception&) {
      throw config_error("config field \"" + key + "\" has the wrong type");
    }
  }
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(path + ": invalid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw config_error(path + ": config must be a JSON object");
  return config_from_json(j);
}

// ── Frozen model parameters ──────────────────────────────────────────────────

// Every tensor is drawn from its own named stream of the root seed, so the
// initialization of one component never shifts when another grows.
struct ModelParams {
  EdgeTable text_edges;
  EdgeTable visual_edges;
  BlockParams text_block;
  BlockParams visual_block;
  FfnParams visual_proj;  // d_i -> d_t
  MultiheadParams cross;
  LayerNormParams cross_ln;
  Matrix pos_table;  // pos label count x d_l
  Matrix sd_table;   // (sd_cap + 1) x d_l
  Matrix co_table;   // (co_cap + 2) x d_l, row 0 holds the -1 value
  WgcnParams wg_pos, wg_sd, wg_co;
  FusionParams fusion;
  PredictionHead head;

  static ModelParams init(const PipelineConfig& cfg, const LabelVocabulary& vocab) {
    cfg.validate();
    ModelParams p;
    auto rng_for = [&](const char* name) { return stream_rng(cfg.seed, name); };

    Rng r_te = rng_for("edge_table/text");
    p.text_edges = EdgeTable::init(std::max(vocab.dependency_labels.size(), 1), cfg.d_z, r_te);
    Rng r_ve = rng_for("edge_table/visual");
    p.visual_edges =
        EdgeTable::init(std::max(vocab.visual_relation_labels.size(), 1), cfg.d_z, r_ve);

    Rng r_tb = rng_for("block/text");
    p.text_block = BlockParams::init(r_tb, cfg.d_t, cfg.d_z, 4 * cfg.d_t);
    Rng r_vb = rng_for("block/visual");
    p.visual_block = BlockParams::init(r_vb, cfg.d_t, cfg.d_z, 4 * cfg.d_t);
    Rng r_vp = rng_for("visual_projection");
    p.visual_proj = FfnParams::init(r_vp, cfg.d_i, cfg.d_t, cfg.d_t);

    Rng r_cm = rng_for("cross_modal");
    p.cross = MultiheadParams::init(r_cm, cfg.d_t, cfg.heads);
    p.cross_ln = LayerNormParams::identity(cfg.d_t);

    Rng r_pt = rng_for("channel/pos_table");
    p.pos_table = uniform_fanin_matrix(r_pt, std::max(vocab.pos_labels.size(), 1), cfg.d_l);
    Rng r_st = rng_for("channel/sd_table");
    p.sd_table = uniform_fanin_matrix(r_st, cfg.sd_cap + 1, cfg.d_l);
    Rng r_ct = rng_for("channel/co_table");
    p.co_table = uniform_fanin_matrix(r_ct, cfg.co_cap + 2, cfg.d_l);

    Rng r_wp = rng_for("wgcn/pos");
    p.wg_pos = WgcnParams::init(r_wp, cfg.d_l, cfg.d_t);
    Rng r_ws = rng_for("wgcn/sd");
    p.wg_sd = WgcnParams::init(r_ws, cfg.d_l, cfg.d_t);
    Rng r_wc = rng_for("wgcn/co");
    p.wg_co = WgcnParams::init(r_wc, cfg.d_l, cfg.d_t);
    Rng r_fu = rng_for("fusion");
    p.fusion = FusionParams::init(r_fu, cfg.d_t);

    Rng r_hd = rng_for("head");
    p.head = init_head(vocab.tag_count(), cfg.d_t, &r_hd);
    return p;
  }
};

// ── Per-record execution ────────────────────────────────────────────────────

struct StageTimes {
  double ingest = 0.0;
  double encode = 0.0;
  double align = 0.0;
  double channels = 0.0;
  double tagging = 0.0;

  StageTimes& operator+=(const StageTimes& o) {
    ingest += o.ingest;
    encode += o.encode;
    align += o.align;
    channels += o.channels;
    tagging += o.tagging;
    return *this;
  }
  double total() const { return ingest + encode + align + channels + tagging; }
};

// Everything the pipeline produced for one record; kept around for exports.
struct RecordArtifacts {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> object_names;
  Matrix cost_node;   // k x n cosine cost
  Matrix plan;        // k x n transport plan
  IntMatrix sd;       // syntactic distances
  IntMatrix co;       // co-occurrence values
  TagGrid predicted_grid;
  Matrix features;    // n x d_t fused word features S
  TagGrid gold_grid;
};

struct RecordResult {
  std::string id;
  double wd_cost = 0.0;
  double gwd_cost = 0.0;
  double loss_graph = 0.0;
  double l_main = 0.0;
  double joint = 0.0;
  EvalCounts counts;
  std::vector<Quintuple> predicted;
};

struct RunReport {
  std::vector<RecordResult> records;
  Metrics metrics;
  StageTimes times;
};

namespace detail {

class StageClock {
 public:
  explicit StageClock(double* sink) : sink_(sink), start_(std::chrono::steady_clock::now()) {}
  ~StageClock() {
    auto end = std::chrono::steady_clock::now();
    *sink_ += std::chrono::duration<double>(end - start_).count();
  }

 private:
  double* sink_;
  std::chrono::steady_clock::time_point start_;
};

template <typename Fn>
auto with_record_id(const std::string& id, Fn&& fn) {
  try {
    return fn();
  } catch (const input_error& e) {
    throw input_error("record " + id + ": " + e.what());
  } catch (const config_error& e) {
    throw config_error("record " + id + ": " + e.what());
  } catch (const numeric_error& e) {
    throw numeric_error("record " + id + ": " + e.what());
  }
}

}  // namespace detail

// Runs graphs -> embeddings -> attribute transformers -> alignment ->
// cross-modal fusion -> channels -> grid prediction for one record. The
// vocabulary is mutable only because graph building interns labels; corpus
// loading has already registered every label, so processing order cannot
// change the tables.
inline RecordResult run_record(const Record& rec, const ModelParams& params,
                               const PipelineConfig& cfg, LabelVocabulary& vocab,
                               const PmiStats& stats, const EmbeddingSource& source,
                               StageTimes* times = nullptr,
                               RecordArtifacts* artifacts = nullptr) {
  return detail::with_record_id(rec.id, [&]() -> RecordResult {
    StageTimes local;
    RecordResult out;
    out.id = rec.id;

    TextualGraph tg;
    VisualGraph vg;
    Matrix x_t, x_i_raw;
    Tensor3 z_t, z_i;
    {
      detail::StageClock clock(&local.ingest);
      tg = build_textual_graph(rec.sentence);
      vg = build_visual_graph(rec.scene, cfg.max_objects, vocab.visual_object_labels,
                              vocab.visual_relation_labels, rec.id);
      x_t = embed_tokens(rec.sentence, source, cfg.d_t, rec.id);
      x_i_raw = embed_objects(vg, source, cfg.d_i, rec.id);
      z_t = embed_edges(tg, params.text_edges);
      z_i = embed_edges(vg, params.visual_edges);
    }

    Matrix h_t, h_i, fused_context;
    {
      detail::StageClock clock(&local.encode);
      h_t = transformer_block(x_t, z_t, tg.adjacency, params.text_block);
      Matrix x_i = project_visual(x_i_raw, params.visual_proj);
      h_i = transformer_block(x_i, z_i, vg.adjacency, params.visual_block);
      fused_context = cross_modal_attention(h_t, h_i, params.cross, params.cross_ln).fused;
    }

    AlignmentResult align;
    {
      detail::StageClock clock(&local.align);
      AlignOptions opt;
      opt.alpha = cfg.alpha;
      opt.epsilon = cfg.epsilon;
      opt.outer_iters = cfg.sinkhorn_outer;
      opt.inner_iters = cfg.sinkhorn_inner;
      align = fused_align(h_i, h_t, vg.adjacency, tg.adjacency, opt);
    }
    out.wd_cost = align.wd_cost;
    out.gwd_cost = align.gwd_cost;
    out.loss_graph = align.loss_graph;

    Matrix s;
    IntMatrix m_sd, m_co;
    {
      detail::StageClock clock(&local.channels);
      Tensor3 r_pos = build_pos_channel(rec.sentence, params.pos_table);
      m_sd = build_sd_matrix(tg);
      m_co = build_co_matrix(rec.sentence, stats, cfg.co_cap);
      IntMatrix sd_clamped = m_sd.cwiseMin(cfg.sd_cap);
      Tensor3 r_sd = embed_integer_matrix(sd_clamped, params.sd_table, 0);
      Tensor3 r_co = embed_integer_matrix(m_co, params.co_table, 1);
      Matrix s_pos = w_gcn(r_pos, fused_context, params.wg_pos).states;
      Matrix s_sd = w_gcn(r_sd, fused_context, params.wg_sd).states;
      Matrix s_co = w_gcn(r_co, fused_context, params.wg_co).states;
      s = fuse_channels(s_pos, s_sd, s_co, params.fusion);
    }

    {
      detail::StageClock clock(&local.tagging);
      Tensor3 probs = predict_grid(s, params.head);
      TagGrid gold = encode_quintuples(rec.gold, rec.sentence.size(), vocab);
      out.l_main = main_loss(probs, gold);
      out.joint = joint_loss(out.l_main, out.loss_graph, cfg.lambda);
      TagGrid pred_grid = grid_argmax(probs);
      out.predicted = decode_grid(pred_grid, vocab);
      out.counts = eval_counts(out.predicted, rec.gold);
      if (artifacts) {
        artifacts->id = rec.id;
        artifacts->tokens = rec.sentence.tokens;
        artifacts->object_names = vg.object_names;
        artifacts->cost_node = cosine_cost(h_i, h_t);
        artifacts->plan = align.plan.values;
        artifacts->sd = m_sd;
        artifacts->co = m_co;
        artifacts->predicted_grid = pred_grid;
        artifacts->features = s;
        artifacts->gold_grid = gold;
      }
    }

    if (times) *times += local;
    return out;
  });
}

inline RunReport run_pipeline(const std::vector<Record>& records, const ModelParams& params,
                              const PipelineConfig& cfg, LabelVocabulary& vocab,
                              const PmiStats& stats, const EmbeddingSource& source) {
  RunReport report;
  EvalCounts totals;
  for (const Record& rec : records) {
    report.records.push_back(
        run_record(rec, params, cfg, vocab, stats, source, &report.times, nullptr));
    totals += report.records.back().counts;
  }
  report.metrics = metrics_from_counts(totals);
  return report;
}

// Machine-readable run report; floats printed with %.12g so equal runs yield
// equal bytes. Timings deliberately stay out (they go to stderr).
inline std::string format_report(const RunReport& report) {
  std::string out = strf("records=%d\n", static_cast<int>(report.records.size()));
  for (const RecordResult& r : report.records) {
    out += strf(
        "record id=%s wd_cost=%.12g gwd_cost=%.12g loss_graph=%.12g l_main=%.12g joint=%.12g "
        "predicted=%ld gold=%ld correct=%ld\n",
        r.id.c_str(), r.wd_cost, r.gwd_cost, r.loss_graph, r.l_main, r.joint, r.counts.predicted,
        r.counts.gold, r.counts.correct);
  }
  out += strf("precision=%.4f\nrecall=%.4f\nf1=%.4f\n", report.metrics.precision,
              report.metrics.recall, report.metrics.f1);
  return out;
}

inline std::string format_times(const StageTimes& t) {
  return strf("timing ingest=%.3fs encode=%.3fs align=%.3fs channels=%.3fs tagging=%.3fs "
              "total=%.3fs\n",
              t.ingest, t.encode, t.align, t.channels, t.tagging, t.total());
}

// ── Head training ────────────────────────────────────────────────────────────

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  PredictionHead head;   // parameters from the best dev epoch
  std::vector<EpochStats> curve;
  int best_epoch = 0;
  double best_dev_loss = 0.0;
};

// Word features and the gold grid per record, computed once since everything
// upstream of the head is frozen.
struct HeadExample {
  std::string id;
  Matrix features;
  TagGrid gold;
};

inline std::vector<HeadExample> prepare_head_examples(const std::vector<Record>& records,
                                                      const ModelParams& params,
                                                      const PipelineConfig& cfg,
                                                      LabelVocabulary& vocab,
                                                      const PmiStats& stats,
                                                      const EmbeddingSource& source) {
  std::vector<HeadExample> out;
  out.reserve(records.size());
  for (const Record& rec : records) {
    RecordArtifacts art;
    run_record(rec, params, cfg, vocab, stats, source, nullptr, &art);
    out.push_back(HeadExample{rec.id, std::move(art.features), std::move(art.gold_grid)});
  }
  return out;
}

inline double corpus_head_loss(const std::vector<HeadExample>& examples,
                               const PredictionHead& head) {
  double loss = 0.0;
  for (const auto& ex : examples) loss += main_loss(predict_grid(ex.features, head), ex.gold);
  return loss;
}

// Full-batch gradient descent on the head alone. The learning rate halves
// (by lr_decay) on every epoch without a dev improvement, and training stops
// `patience` epochs after the dev minimum.
inline TrainResult train_head(const std::vector<HeadExample>& train,
                              const std::vector<HeadExample>& dev, PredictionHead head,
                              const PipelineConfig& cfg) {
  if (train.empty()) throw input_error("head training needs a non-empty training corpus");
  TrainResult res;
  res.best_dev_loss = corpus_head_loss(dev.empty() ? train : dev, head);
  res.best_epoch = 0;
  res.head = head;
  double lr = cfg.learning_rate;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double train_loss = 0.0;
    Matrix grad_w = Matrix::Zero(head.w.rows(), head.w.cols());
    Vector grad_b = Vector::Zero(head.b.size());
    for (const auto& ex : train) {
      double loss = 0.0;
      HeadGradients g = head_gradients(ex.features, ex.gold, head, &loss);
      train_loss += loss;
      grad_w += g.w;
      grad_b += g.b;
    }
    if (!std::isfinite(train_loss))
      throw numeric_error(strf("head training diverged at epoch %d (loss %.12g)", epoch,
                               train_loss));
    head.w -= lr * grad_w;
    head.b -= lr * grad_b;

    double dev_loss = corpus_head_loss(dev.empty() ? train : dev, head);
    res.curve.push_back(EpochStats{epoch, train_loss, dev_loss, lr});
    if (dev_loss < res.best_dev_loss) {
      res.best_dev_loss = dev_loss;
      res.best_epoch = epoch;
      res.head = head;
    } else {
      lr *= cfg.lr_decay;
    }
    if (epoch - res.best_epoch >= cfg.patience) break;
  }
  return res;
}

inline std::string format_train_curve(const TrainResult& res) {
  std::string out;
  for (const EpochStats& e : res.curve)
    out += strf("epoch=%d train_loss=%.12g dev_loss=%.12g lr=%.12g\n", e.epoch, e.train_loss,
                e.dev_loss, e.learning_rate);
  out += strf("best_epoch=%d best_dev_loss=%.12g\n", res.best_epoch, res.best_dev_loss);
  return out;
}

inline void save_head(const PredictionHead& head, const std::string& path) {
  Checkpoint ck;
  ck.put("head/w", head.w);
  ck.put("head/b", head.b);
  ck.save(path);
}

inline PredictionHead load_head(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  PredictionHead head;
  head.w = ck.matrix("head/w");
  head.b = ck.vector("head/b");
  return head;
}

// ── Alpha/lambda sweep ───────────────────────────────────────────────────────

struct SweepRow {
  double alpha = 0.0;
  double lambda = 0.0;
  double wd_cost = 0.0;     // corpus means
  double gwd_cost = 0.0;
  double loss_graph = 0.0;
  double l_main = 0.0;
  double joint = 0.0;
  Metrics metrics;
};

inline std::vector<SweepRow> sweep(const std::vector<Record>& records, const ModelParams& params,
                                   PipelineConfig cfg, LabelVocabulary& vocab,
                                   const PmiStats& stats, const EmbeddingSource& source,
                                   const std::vector<double>& alphas,
                                   const std::vector<double>& lambdas) {
  if (alphas.empty() || lambdas.empty())
    throw config_error("sweep needs at least one alpha and one lambda");
  std::vector<SweepRow> rows;
  for (double alpha : alphas) {
    cfg.alpha = alpha;
    cfg.validate();
    RunReport base = run_pipeline(records, params, cfg, vocab, stats, source);
    for (double lambda : lambdas) {
      if (lambda < 0.0)
        throw config_error(strf("lambda must be non-negative, got %.12g", lambda));
      SweepRow row;
      row.alpha = alpha;
      row.lambda = lambda;
      int n = static_cast<int>(base.records.size());
      EvalCounts totals;
      for (const RecordResult& r : base.records) {
        row.wd_cost += r.wd_cost;
        row.gwd_cost += r.gwd_cost;
        row.loss_graph += r.loss_graph;
        row.l_main += r.l_main;
        row.joint += joint_loss(r.l_main, r.loss_graph, lambda);
        totals += r.counts;
      }
      if (n > 0) {
        row.wd_cost /= n;
        row.gwd_cost /= n;
        row.loss_graph /= n;
        row.l_main /= n;
        row.joint /= n;
      }
      row.metrics = metrics_from_counts(totals);
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string format_sweep(const std::vector<SweepRow>& rows) {
  std::string out = "alpha\tlambda\twd_cost\tgwd_cost\tloss_graph\tl_main\tjoint\tf1\n";
  for (const SweepRow& r : rows)
    out += strf("%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.4f\n", r.alpha, r.lambda,
                r.wd_cost, r.gwd_cost, r.loss_graph, r.l_main, r.joint, r.metrics.f1);
  return out;
}

// ── Matrix exports ───────────────────────────────────────────────────────────

namespace detail {

inline void write_tsv(const std::string& path, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels,
                      const std::function<std::string(int, int)>& cell) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write export file: " + path);
  for (const auto& c : col_labels) out << "\t" << c;
  out << "\n";
  for (size_t i = 0; i < row_labels.size(); ++i) {
    out << row_labels[i];
    for (size_t j = 0; j < col_labels.size(); ++j)
      out << "\t" << cell(static_cast<int>(i), static_cast<int>(j));
    out << "\n";
  }
}

}  // namespace detail

// Writes the node cost, transport plan, decoded tag grid, and the integer
// channel matrices of one processed record as labeled TSV files.
inline void export_record_matrices(const RecordArtifacts& art, const LabelVocabulary& vocab,
                                   const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

  detail::write_tsv(path("cost.tsv"), art.object_names, art.tokens, [&](int i, int j) {
    return strf("%.12g", art.cost_node(i, j));
  });
  detail::write_tsv(path("plan.tsv"), art.object_names, art.tokens, [&](int i, int j) {
    return strf("%.12g", art.plan(i, j));
  });
  detail::write_tsv(path("grid.tsv"), art.tokens, art.tokens, [&](int i, int j) {
    return vocab.tag_name(art.predicted_grid.cells(i, j));
  });
  detail::write_tsv(path("sd.tsv"), art.tokens, art.tokens, [&](int i, int j) {
    return strf("%d", art.sd(i, j));
  });
  detail::write_tsv(path("co.tsv"), art.tokens, art.tokens, [&](int i, int j) {
    return strf("%d", art.co(i, j));
  });
}

}  // namespace gale
