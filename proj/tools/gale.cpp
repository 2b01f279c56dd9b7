// Command-line driver: corpus validation, full pipeline runs, head training,
// alpha/lambda sweeps, matrix exports, and synthetic corpus generation.

#include <gale/gale.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr const char* kConfigEnvVar = "GALE_CONFIG";

struct ConfigFlags {
  std::string config_path;
  std::optional<int> d_t, d_i, d_z, d_l, max_tokens, max_objects;
  std::optional<int> sinkhorn_inner, sinkhorn_outer, heads, patience, epochs, sd_cap, co_cap;
  std::optional<double> epsilon, alpha, lambda, learning_rate, lr_decay;
  std::optional<uint64_t> seed;
};

// Flags mirror the config fields; a config file overrides the defaults and
// explicit flags override the file.
void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.config_path,
                  "JSON config file (default: $" + std::string(kConfigEnvVar) + ")");
  cmd->add_option("--d_t", f.d_t, "token representation width");
  cmd->add_option("--d_i", f.d_i, "raw visual feature width");
  cmd->add_option("--d_z", f.d_z, "edge vector width");
  cmd->add_option("--d_l", f.d_l, "channel vector width");
  cmd->add_option("--max_tokens", f.max_tokens, "sentence length cap");
  cmd->add_option("--max_objects", f.max_objects, "scene object cap");
  cmd->add_option("--sinkhorn_inner", f.sinkhorn_inner, "Sinkhorn iterations per round");
  cmd->add_option("--sinkhorn_outer", f.sinkhorn_outer, "fused alignment rounds");
  cmd->add_option("--epsilon", f.epsilon, "entropic regularization weight");
  cmd->add_option("--alpha", f.alpha, "node-cost weight in the fused alignment");
  cmd->add_option("--lambda", f.lambda, "alignment weight in the joint loss");
  cmd->add_option("--heads", f.heads, "cross-modal attention heads");
  cmd->add_option("--seed", f.seed, "root seed for all parameter streams");
  cmd->add_option("--learning_rate", f.learning_rate, "head training step size");
  cmd->add_option("--lr_decay", f.lr_decay, "step-size decay on dev non-improvement");
  cmd->add_option("--patience", f.patience, "early-stop patience in epochs");
  cmd->add_option("--epochs", f.epochs, "head training epoch cap");
  cmd->add_option("--sd_cap", f.sd_cap, "syntactic distance clamp");
  cmd->add_option("--co_cap", f.co_cap, "co-occurrence value clamp");
}

gale::PipelineConfig resolve_config(const ConfigFlags& f) {
  gale::PipelineConfig cfg;
  std::string path = f.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  }
  if (!path.empty()) cfg = gale::load_config(path);
  if (f.d_t) cfg.d_t = *f.d_t;
  if (f.d_i) cfg.d_i = *f.d_i;
  if (f.d_z) cfg.d_z = *f.d_z;
  if (f.d_l) cfg.d_l = *f.d_l;
  if (f.max_tokens) cfg.max_tokens = *f.max_tokens;
  if (f.max_objects) cfg.max_objects = *f.max_objects;
  if (f.sinkhorn_inner) cfg.sinkhorn_inner = *f.sinkhorn_inner;
  if (f.sinkhorn_outer) cfg.sinkhorn_outer = *f.sinkhorn_outer;
  if (f.epsilon) cfg.epsilon = *f.epsilon;
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.lambda) cfg.lambda = *f.lambda;
  if (f.heads) cfg.heads = *f.heads;
  if (f.seed) cfg.seed = *f.seed;
  if (f.learning_rate) cfg.learning_rate = *f.learning_rate;
  if (f.lr_decay) cfg.lr_decay = *f.lr_decay;
  if (f.patience) cfg.patience = *f.patience;
  if (f.epochs) cfg.epochs = *f.epochs;
  if (f.sd_cap) cfg.sd_cap = *f.sd_cap;
  if (f.co_cap) cfg.co_cap = *f.co_cap;
  cfg.validate();
  return cfg;
}

gale::LabelVocabulary resolve_vocab(const std::string& vocab_path) {
  if (vocab_path.empty()) return gale::LabelVocabulary::defaults();
  return gale::load_vocabulary(vocab_path);
}

gale::EmbeddingSource resolve_source(const std::string& embeddings_path,
                                     const gale::PipelineConfig& cfg,
                                     gale::EmbeddingFile& storage) {
  if (embeddings_path.empty()) return gale::EmbeddingSource::hashed(cfg.seed);
  storage = gale::load_embedding_file(embeddings_path);
  return gale::EmbeddingSource::from_file(storage);
}

int cmd_ingest(const std::string& corpus_path, const std::string& vocab_path,
               const ConfigFlags& flags) {
  gale::PipelineConfig cfg = resolve_config(flags);
  gale::LabelVocabulary vocab = resolve_vocab(vocab_path);
  std::vector<gale::Record> records = gale::load_corpus(corpus_path, vocab, cfg.max_tokens);
  std::string out = gale::strf("records=%d\n", static_cast<int>(records.size()));
  for (const auto& rec : records)
    out += gale::strf("record id=%s tokens=%d objects=%d relations=%d quintuples=%d\n",
                      rec.id.c_str(), rec.sentence.size(),
                      static_cast<int>(rec.scene.objects.size()),
                      static_cast<int>(rec.scene.relations.size()),
                      static_cast<int>(rec.gold.size()));
  out += gale::strf(
      "vocab entity_types=%d relation_types=%d pos=%d dependency=%d visual_objects=%d "
      "visual_relations=%d\nok\n",
      vocab.entity_types.size(), vocab.relation_types.size(), vocab.pos_labels.size(),
      vocab.dependency_labels.size(), vocab.visual_object_labels.size(),
      vocab.visual_relation_labels.size());
  std::fputs(out.c_str(), stdout);
  std::fprintf(stderr, "validated %d records from %s\n", static_cast<int>(records.size()),
               corpus_path.c_str());
  return 0;
}

int cmd_run(const std::string& corpus_path, const std::string& vocab_path,
            const std::string& embeddings_path, const std::string& head_path,
            const ConfigFlags& flags) {
  gale::PipelineConfig cfg = resolve_config(flags);
  gale::LabelVocabulary vocab = resolve_vocab(vocab_path);
  std::vector<gale::Record> records = gale::load_corpus(corpus_path, vocab, cfg.max_tokens);
  gale::PmiStats stats;
  if (!records.empty()) {
    std::vector<gale::TokenizedSentence> sentences;
    for (const auto& r : records) sentences.push_back(r.sentence);
    stats = gale::build_pmi_stats(sentences);
  } else {
    stats.sentences = 1;  // empty corpus: no sentences will query the stats
  }
  gale::ModelParams params = gale::ModelParams::init(cfg, vocab);
  if (!head_path.empty()) params.head = gale::load_head(head_path);
  gale::EmbeddingFile storage;
  gale::EmbeddingSource source = resolve_source(embeddings_path, cfg, storage);
  gale::RunReport report = gale::run_pipeline(records, params, cfg, vocab, stats, source);
  std::fputs(gale::format_report(report).c_str(), stdout);
  std::fputs(gale::format_times(report.times).c_str(), stderr);
  std::fprintf(stderr, "f1=%.4f over %d records\n", report.metrics.f1,
               static_cast<int>(report.records.size()));
  return 0;
}

int cmd_train_head(const std::string& train_path, const std::string& dev_path,
                   const std::string& vocab_path, const std::string& embeddings_path,
                   const std::string& out_path, const ConfigFlags& flags) {
  gale::PipelineConfig cfg = resolve_config(flags);
  gale::LabelVocabulary vocab = resolve_vocab(vocab_path);
  std::vector<gale::Record> train = gale::load_corpus(train_path, vocab, cfg.max_tokens);
  std::vector<gale::Record> dev;
  if (!dev_path.empty()) dev = gale::load_corpus(dev_path, vocab, cfg.max_tokens);
  if (train.empty()) throw gale::input_error("training corpus is empty: " + train_path);

  std::vector<gale::TokenizedSentence> sentences;
  for (const auto& r : train) sentences.push_back(r.sentence);
  gale::PmiStats stats = gale::build_pmi_stats(sentences);
  gale::ModelParams params = gale::ModelParams::init(cfg, vocab);
  gale::EmbeddingFile storage;
  gale::EmbeddingSource source = resolve_source(embeddings_path, cfg, storage);

  std::vector<gale::HeadExample> train_ex =
      gale::prepare_head_examples(train, params, cfg, vocab, stats, source);
  std::vector<gale::HeadExample> dev_ex =
      gale::prepare_head_examples(dev, params, cfg, vocab, stats, source);
  gale::TrainResult result = gale::train_head(train_ex, dev_ex, params.head, cfg);
  std::fputs(gale::format_train_curve(result).c_str(), stdout);
  if (!out_path.empty()) {
    gale::save_head(result.head, out_path);
    std::fprintf(stderr, "saved head parameters to %s\n", out_path.c_str());
  }
  std::fprintf(stderr, "trained %d epochs, best dev loss %.12g at epoch %d\n",
               static_cast<int>(result.curve.size()), result.best_dev_loss, result.best_epoch);
  return 0;
}

int cmd_sweep(const std::string& corpus_path, const std::string& vocab_path,
              const std::string& embeddings_path, const std::vector<double>& alphas,
              const std::vector<double>& lambdas, const ConfigFlags& flags) {
  gale::PipelineConfig cfg = resolve_config(flags);
  gale::LabelVocabulary vocab = resolve_vocab(vocab_path);
  std::vector<gale::Record> records = gale::load_corpus(corpus_path, vocab, cfg.max_tokens);
  std::vector<gale::TokenizedSentence> sentences;
  for (const auto& r : records) sentences.push_back(r.sentence);
  gale::PmiStats stats = gale::build_pmi_stats(sentences);
  gale::ModelParams params = gale::ModelParams::init(cfg, vocab);
  gale::EmbeddingFile storage;
  gale::EmbeddingSource source = resolve_source(embeddings_path, cfg, storage);
  std::vector<gale::SweepRow> rows =
      gale::sweep(records, params, cfg, vocab, stats, source, alphas, lambdas);
  std::fputs(gale::format_sweep(rows).c_str(), stdout);
  std::fprintf(stderr, "swept %d settings over %d records\n", static_cast<int>(rows.size()),
               static_cast<int>(records.size()));
  return 0;
}

int cmd_export(const std::string& corpus_path, const std::string& vocab_path,
               const std::string& embeddings_path, const std::string& record_id,
               const std::string& out_dir, const ConfigFlags& flags) {
  gale::PipelineConfig cfg = resolve_config(flags);
  gale::LabelVocabulary vocab = resolve_vocab(vocab_path);
  std::vector<gale::Record> records = gale::load_corpus(corpus_path, vocab, cfg.max_tokens);
  std::vector<gale::TokenizedSentence> sentences;
  for (const auto& r : records) sentences.push_back(r.sentence);
  gale::PmiStats stats = gale::build_pmi_stats(sentences);
  gale::ModelParams params = gale::ModelParams::init(cfg, vocab);
  gale::EmbeddingFile storage;
  gale::EmbeddingSource source = resolve_source(embeddings_path, cfg, storage);

  const gale::Record* target = nullptr;
  for (const auto& r : records)
    if (r.id == record_id) target = &r;
  if (!target) throw gale::input_error("unknown record id: " + record_id);

  gale::RecordArtifacts artifacts;
  gale::run_record(*target, params, cfg, vocab, stats, source, nullptr, &artifacts);
  gale::export_record_matrices(artifacts, vocab, out_dir);
  std::fprintf(stdout, "exported record=%s dir=%s files=cost.tsv,plan.tsv,grid.tsv,sd.tsv,co.tsv\n",
               record_id.c_str(), out_dir.c_str());
  return 0;
}

int cmd_synth(const std::string& out_path, int count, int min_tokens, int max_tokens,
              int min_objects, int max_objects, int max_quintuples, uint64_t seed) {
  gale::SynthOptions opt;
  opt.records = count;
  opt.min_tokens = min_tokens;
  opt.max_tokens = max_tokens;
  opt.min_objects = min_objects;
  opt.max_objects = max_objects;
  opt.max_quintuples = max_quintuples;
  opt.seed = seed;
  if (opt.min_tokens < 1 || opt.max_tokens < opt.min_tokens)
    throw gale::config_error("token range is empty");
  if (opt.min_objects < 1 || opt.max_objects < opt.min_objects)
    throw gale::config_error("object range is empty");
  gale::LabelVocabulary vocab = gale::LabelVocabulary::defaults();
  std::vector<gale::Record> records = gale::synth_corpus(opt, vocab);
  gale::write_corpus(records, vocab, out_path);
  std::fprintf(stdout, "wrote records=%d path=%s\n", static_cast<int>(records.size()),
               out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint multimodal entity-relation extraction pipeline"};
  app.require_subcommand(1);

  ConfigFlags flags;
  std::string corpus_path, vocab_path, embeddings_path, head_path;
  std::string train_path, dev_path, out_path, record_id, out_dir;
  std::vector<double> alphas{0.0, 0.4, 1.0};
  std::vector<double> lambdas{0.0, 0.6};
  int synth_count = 20, synth_min_tokens = 8, synth_max_tokens = 70;
  int synth_min_objects = 2, synth_max_objects = 12, synth_max_quintuples = 2;
  uint64_t synth_seed = 0;

  CLI::App* ingest = app.add_subcommand("ingest", "validate a corpus file");
  ingest->add_option("corpus", corpus_path, "line-delimited corpus")->required();
  ingest->add_option("--vocab", vocab_path, "label vocabulary config");
  add_config_flags(ingest, flags);

  CLI::App* run = app.add_subcommand("run", "run the full pipeline and report metrics");
  run->add_option("corpus", corpus_path, "line-delimited corpus")->required();
  run->add_option("--vocab", vocab_path, "label vocabulary config");
  run->add_option("--embeddings", embeddings_path, "precomputed embedding file");
  run->add_option("--head", head_path, "trained head checkpoint");
  add_config_flags(run, flags);

  CLI::App* train = app.add_subcommand("train-head", "train the tag classifier");
  train->add_option("train", train_path, "training corpus")->required();
  train->add_option("--dev", dev_path, "development corpus for early stopping");
  train->add_option("--vocab", vocab_path, "label vocabulary config");
  train->add_option("--embeddings", embeddings_path, "precomputed embedding file");
  train->add_option("--out", out_path, "checkpoint path for the trained head");
  add_config_flags(train, flags);

  CLI::App* sweep = app.add_subcommand("sweep", "grid-run over alpha and lambda");
  sweep->add_option("corpus", corpus_path, "line-delimited corpus")->required();
  sweep->add_option("--vocab", vocab_path, "label vocabulary config");
  sweep->add_option("--embeddings", embeddings_path, "precomputed embedding file");
  sweep->add_option("--alphas", alphas, "alpha values");
  sweep->add_option("--lambdas", lambdas, "lambda values");
  add_config_flags(sweep, flags);

  CLI::App* exp = app.add_subcommand("export", "dump one record's matrices as TSV");
  exp->add_option("corpus", corpus_path, "line-delimited corpus")->required();
  exp->add_option("--record", record_id, "record id to export")->required();
  exp->add_option("--out", out_dir, "output directory")->required();
  exp->add_option("--vocab", vocab_path, "label vocabulary config");
  exp->add_option("--embeddings", embeddings_path, "precomputed embedding file");
  add_config_flags(exp, flags);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--out", out_path, "corpus file to write")->required();
  synth->add_option("--records", synth_count, "record count");
  synth->add_option("--min_tokens", synth_min_tokens, "sentence length lower bound");
  synth->add_option("--max_tokens", synth_max_tokens, "sentence length upper bound");
  synth->add_option("--min_objects", synth_min_objects, "scene object lower bound");
  synth->add_option("--max_objects", synth_max_objects, "scene object upper bound");
  synth->add_option("--max_quintuples", synth_max_quintuples, "planted quintuples per record");
  synth->add_option("--seed", synth_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(ingest)) return cmd_ingest(corpus_path, vocab_path, flags);
    if (app.got_subcommand(run))
      return cmd_run(corpus_path, vocab_path, embeddings_path, head_path, flags);
    if (app.got_subcommand(train)) {
      if (!flags.seed)
        throw gale::config_error("train-head requires an explicit --seed");
      return cmd_train_head(train_path, dev_path, vocab_path, embeddings_path, out_path, flags);
    }
    if (app.got_subcommand(sweep))
      return cmd_sweep(corpus_path, vocab_path, embeddings_path, alphas, lambdas, flags);
    if (app.got_subcommand(exp))
      return cmd_export(corpus_path, vocab_path, embeddings_path, record_id, out_dir, flags);
    if (app.got_subcommand(synth))
      return cmd_synth(out_path, synth_count, synth_min_tokens, synth_max_tokens,
                       synth_min_objects, synth_max_objects, synth_max_quintuples, synth_seed);
  } catch (const gale::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const gale::numeric_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const gale::input_error& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
