#include "logsd/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "logsd/checkpoint.hpp"
#include "logsd/config.hpp"
#include "logsd/corpus.hpp"
#include "logsd/embedder.hpp"
#include "logsd/evaluation.hpp"
#include "logsd/kernels.hpp"
#include "logsd/model.hpp"
#include "logsd/sequencer.hpp"
#include "logsd/synthbench.hpp"
#include "logsd/trainer.hpp"

namespace logsd::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_file;
  std::string out_dir;
  std::string input;
  std::string out;
  std::vector<std::string> sets;
  std::int64_t seed = 0;
  bool seed_given = false;
};

struct Context {
  RunConfig cfg;
  std::string hash;
  std::uint64_t seed = 0;
  std::ostream& out;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = o.config_file.empty() ? RunConfig() : RunConfig::from_file(o.config_file);
  for (const auto& s : o.sets) cfg.set_assignment(s);
  if (o.seed_given) cfg.set("seed", std::to_string(o.seed));
  if (!o.out_dir.empty()) cfg.set("out_dir", o.out_dir);
  if (!o.input.empty()) cfg.set("input", o.input);
  return cfg;
}

fs::path output_path(const Context& ctx, const Options& o, const std::string& key) {
  const fs::path p = o.out.empty() ? ctx.cfg.path(key) : fs::path(o.out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

fs::path input_path(const Context& ctx, const std::string& key) {
  const auto p = ctx.cfg.path(key);
  if (!fs::exists(p)) throw DataError("missing input file " + p.string() + " (" + key + ")");
  return p;
}

std::string percent(std::size_t part, std::size_t whole) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2)
    << (whole ? 100.0 * static_cast<double>(part) / static_cast<double>(whole) : 0.0) << "%";
  return s.str();
}

void print_stats(std::ostream& out, const std::string& title,
                 std::span<const sequencer::EventSequence> train,
                 std::span<const sequencer::EventSequence> test) {
  std::vector<sequencer::EventSequence> all(train.begin(), train.end());
  all.insert(all.end(), test.begin(), test.end());
  const auto s = sequencer::compute_stats(all);
  out << "  " << std::left << std::setw(16) << title << "\n";
  out << "    sequences     " << s.sequences << " (train " << train.size() << ", test "
      << test.size() << ")\n";
  out << "    events        " << s.unique_events << "\n";
  out << "    normal        " << s.normal << " (" << percent(s.normal, s.sequences) << ")\n";
  out << "    anomalous     " << s.anomalous << " (" << percent(s.anomalous, s.sequences) << ")\n";
}

embedder::EmbeddingTable build_table(const Context& ctx) {
  const auto catalog = corpus::TemplateCatalog::load(input_path(ctx, "catalog"));
  const auto dim = static_cast<std::size_t>(ctx.cfg.get_int("embedding_dim"));
  const auto seed = static_cast<std::uint64_t>(ctx.cfg.get_int("embedding_seed"));
  if (ctx.cfg.get("embedding_file").empty()) {
    return embedder::EmbeddingTable::from_catalog(catalog, dim, seed);
  }
  const auto vectors = embedder::load_word_vectors(ctx.cfg.path("embedding_file"), dim);
  return embedder::EmbeddingTable::from_catalog(catalog, dim, seed, &vectors);
}

int cmd_parse(Context& ctx, const Options& o) {
  if (ctx.cfg.get("input").empty()) throw DataError("no input log given (--input or input =)");
  const auto input = ctx.cfg.path("input");
  const auto profile = corpus::FormatProfile::from_config(ctx.cfg);
  corpus::DrainParams dp;
  dp.depth = static_cast<int>(ctx.cfg.get_int("parser_depth"));
  dp.sim_threshold = ctx.cfg.get_double("parser_sim_threshold");
  dp.max_children = static_cast<std::size_t>(ctx.cfg.get_int("parser_max_children"));
  corpus::TemplateCatalog catalog(dp);
  corpus::LoadReport report;
  const auto records = corpus::parse_file(input, profile, catalog, &report);

  const auto parsed = output_path(ctx, o, "parsed");
  const auto catalog_path = ctx.cfg.path("catalog");
  if (catalog_path.has_parent_path()) fs::create_directories(catalog_path.parent_path());
  corpus::write_parsed_tsv(parsed, records, ctx.hash);
  catalog.save(catalog_path, ctx.hash);
  ctx.out << "parsed " << records.size() << " records from " << report.lines << " lines ("
          << report.malformed << " malformed) into " << catalog.size() << " templates\n";
  ctx.out << "wrote " << parsed.string() << " and " << catalog_path.string() << "\n";
  ctx.out << "config_hash " << ctx.hash << "\n";
  return kOk;
}

int cmd_prepare(Context& ctx, const Options&) {
  auto records = corpus::read_parsed_tsv(input_path(ctx, "parsed"));
  const bool dedup = ctx.cfg.get_bool("dedup");
  const auto& grouping = ctx.cfg.get("grouping");
  const auto strategy = sequencer::parse_split_strategy(ctx.cfg.get("split_strategy"));
  const double ratio = ctx.cfg.get_double("train_ratio");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("train_ratio must lie in (0, 1)");

  std::vector<std::size_t> runs;
  if (dedup) records = sequencer::dedup_records(records, &runs);

  std::vector<sequencer::EventSequence> seqs;
  std::string window_text = "n/a";
  if (grouping == "entry") {
    const auto w = ctx.cfg.get_int("window_size");
    if (w < 2) throw ConfigError("window_size must be at least 2");
    window_text = std::to_string(w);
    seqs = sequencer::group_fixed_window(records, static_cast<std::size_t>(w), runs).sequences;
  } else if (grouping == "session") {
    if (ctx.cfg.get("session_labels").empty()) {
      throw ConfigError("session grouping needs session_labels");
    }
    const auto labels = corpus::load_session_labels(ctx.cfg.path("session_labels"));
    seqs = sequencer::group_by_session(records, labels).sequences;
  } else {
    throw ConfigError("grouping must be entry or session, got '" + grouping + "'");
  }
  auto ds = sequencer::split(std::move(seqs), strategy, ratio, ctx.seed);
  const auto filtered = sequencer::filter_training_normals(ds.train);

  sequencer::DatasetHeader header;
  header.strategy = sequencer::split_strategy_name(strategy);
  header.window = window_text;
  header.dedup = dedup;
  header.seed = ctx.seed;
  header.config_hash = ctx.hash;
  const auto train_path = ctx.cfg.path("train_set");
  const auto test_path = ctx.cfg.path("test_set");
  for (const auto& p : {train_path, test_path}) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  }
  sequencer::write_dataset(train_path, filtered.normals, header);
  sequencer::write_dataset(test_path, ds.test, header);

  ctx.out << "dataset statistics\n";
  ctx.out << "    grouping      " << grouping;
  if (grouping == "entry") ctx.out << " (window=" << window_text << ")";
  ctx.out << "\n    dedup         " << (dedup ? "enabled" : "disabled") << "\n";
  ctx.out << "    split         " << header.strategy << " train_ratio=" << format_double(ratio);
  if (ds.boundary_line) ctx.out << " boundary line_no=" << *ds.boundary_line;
  ctx.out << "\n";
  print_stats(ctx.out, "all sequences", ds.train, ds.test);
  ctx.out << "    train normals " << filtered.normals.size() << " (discarded "
          << filtered.discarded << " anomalous)\n";
  ctx.out << "config_hash " << ctx.hash << "\n";
  return kOk;
}

int cmd_train(Context& ctx, const Options& o) {
  const auto train_set = sequencer::read_dataset(input_path(ctx, "train_set"));
  const auto normals = sequencer::filter_training_normals(train_set);
  if (normals.discarded) {
    throw DataError("training set contains " + std::to_string(normals.discarded) +
                    " anomalous sequences");
  }
  const auto table = build_table(ctx);
  const auto exp = synthbench::Experiment::from_config(ctx.cfg);
  auto& out = ctx.out;
  const auto result = trainer::train(normals.normals, table, exp.model, exp.mask, exp.train,
                                     [&out](const trainer::EpochLog& e) {
                                       out << "epoch " << e.epoch << " L=" << format_double(e.total)
                                           << " lr=" << format_double(e.lr) << "\n";
                                     });
  const auto ckpt = output_path(ctx, o, "checkpoint");
  checkpoint::Metadata meta{{"config_hash", ctx.hash},
                            {"seed", std::to_string(ctx.seed)},
                            {"epochs", std::to_string(result.log.size())}};
  checkpoint::save(ckpt, result.model, result.center, result.frequencies, table, exp.mask,
                   exp.train.max_seq_len, meta);
  const auto log_path = ctx.cfg.path("loss_log");
  if (log_path.has_parent_path()) fs::create_directories(log_path.parent_path());
  trainer::write_loss_log(log_path, result.log, ctx.hash);
  out << "trained " << result.model.config().variant.code() << " for " << result.log.size()
      << " epochs" << (result.early_stopped ? " (early stop)" : "") << "\n";
  out << "wrote " << ckpt.string() << " and " << log_path.string() << "\n";
  out << "config_hash " << ctx.hash << "\n";
  return kOk;
}

int cmd_score(Context& ctx, const Options& o) {
  const auto bundle = checkpoint::load(input_path(ctx, "checkpoint"));
  const auto test = sequencer::read_dataset(input_path(ctx, "test_set"));
  const auto scores = model::sequence_scores(bundle.model, bundle.frequencies, bundle.mask_config,
                                             test, bundle.embeddings, bundle.max_seq_len);
  std::vector<evaluation::ScoredSequence> rows;
  for (std::size_t i = 0; i < test.size(); ++i) {
    rows.push_back({test[i].seq_id, scores[i], test[i].label});
  }
  const auto path = output_path(ctx, o, "scores");
  evaluation::write_scores(path, rows,
                           {ctx.hash, ctx.seed, bundle.model.config().variant.code()});
  ctx.out << "scored " << rows.size() << " sequences into " << path.string() << "\n";
  ctx.out << "config_hash " << ctx.hash << "\n";
  return kOk;
}

int cmd_evaluate(Context& ctx, const Options& o) {
  auto rows = evaluation::read_scores(input_path(ctx, "scores"));
  const auto report = evaluation::ScoreReport::build(std::move(rows));
  const auto report_path = output_path(ctx, o, "report");
  const auto metrics_path = ctx.cfg.path("metrics");
  if (metrics_path.has_parent_path()) fs::create_directories(metrics_path.parent_path());
  evaluation::write_report(report_path, report, ctx.hash, ctx.cfg.canonical_text(false));
  evaluation::write_metrics(metrics_path, report, ctx.hash, ctx.seed);

  const auto& m = report.metrics;
  std::vector<Label> labels;
  for (const auto& r : report.rows) labels.push_back(r.label);
  const auto coin = evaluation::random_detector(labels.size(), ctx.seed);
  evaluation::Confusion rc;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = coin[i] == Label::kAnomalous, t = labels[i] == Label::kAnomalous;
    if (p && t) ++rc.tp;
    else if (p) ++rc.fp;
    else if (t) ++rc.fn;
    else ++rc.tn;
  }
  const auto rm = evaluation::metrics_from_confusion(rc);
  ctx.out << "threshold " << format_double(report.threshold) << " (oracle-threshold)\n";
  ctx.out << "MCC " << format_double(m.mcc) << "  P " << format_double(m.precision) << "  R "
          << format_double(m.recall) << "  F1 " << format_double(m.f1) << "\n";
  ctx.out << "AUPRC " << format_double(report.auprc) << "  AUROC " << format_double(report.auroc)
          << "\n";
  ctx.out << "random detector: MCC " << format_double(rm.mcc) << "  F1 " << format_double(rm.f1)
          << "\n";
  ctx.out << "wrote " << report_path.string() << " and " << metrics_path.string() << "\n";
  ctx.out << "config_hash " << ctx.hash << "\n";
  return kOk;
}

int cmd_synth(Context& ctx, const Options&) {
  const auto sc = synthbench::SynthConfig::from_config(ctx.cfg);
  const auto corpus = synthbench::generate(sc);
  sequencer::DatasetHeader header;
  header.strategy = "synthetic";
  header.seed = sc.seed;
  header.config_hash = ctx.hash;
  const auto train_path = ctx.cfg.path("train_set");
  const auto test_path = ctx.cfg.path("test_set");
  const auto catalog_path = ctx.cfg.path("catalog");
  for (const auto& p : {train_path, test_path, catalog_path}) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  }
  sequencer::write_dataset(train_path, corpus.dataset.train, header);
  sequencer::write_dataset(test_path, corpus.dataset.test, header);
  corpus.catalog.save(catalog_path, ctx.hash);

  std::size_t dominant = 0, positions = 0;
  for (const auto& s : corpus.dataset.train) {
    positions += s.event_ids.size();
    for (int id : s.event_ids) dominant += id < sc.first_rare_id();
  }
  ctx.out << "synthetic corpus\n";
  print_stats(ctx.out, "all sequences", corpus.dataset.train, corpus.dataset.test);
  ctx.out << "    dominant share of training positions " << percent(dominant, positions) << "\n";
  ctx.out << "wrote " << train_path.string() << ", " << test_path.string() << " and "
          << catalog_path.string() << "\n";
  ctx.out << "config_hash " << ctx.hash << "\n";
  return kOk;
}

int cmd_ablate(Context& ctx, const Options& o) {
  sequencer::SplitDataset ds;
  ds.train = sequencer::read_dataset(input_path(ctx, "train_set"));
  ds.test = sequencer::read_dataset(input_path(ctx, "test_set"));
  const auto table = build_table(ctx);
  const auto exp = synthbench::Experiment::from_config(ctx.cfg);
  std::vector<std::string> variants;
  {
    std::stringstream ss(ctx.cfg.get("ablation_variants"));
    std::string v;
    while (std::getline(ss, v, ',')) {
      v.erase(0, v.find_first_not_of(' '));
      v.erase(v.find_last_not_of(' ') + 1);
      if (!v.empty()) variants.push_back(v);
    }
  }
  const auto rows = synthbench::run_ablation(ds, table, exp, variants);
  const auto path = output_path(ctx, o, "ablation_report");
  synthbench::write_ablation_report(path, rows, ctx.hash, ctx.seed);
  ctx.out << "variant  epochs  MCC      F1       AUPRC    AUROC\n";
  for (const auto& r : rows) {
    ctx.out << std::left << std::setw(9) << r.variant << std::setw(8) << r.epochs << std::fixed
            << std::setprecision(4) << std::setw(9) << r.mcc << std::setw(9) << r.f1
            << std::setw(9) << r.auprc << r.auroc << "\n";
    ctx.out.unsetf(std::ios::floatfield);
  }
  ctx.out << "wrote " << path.string() << "\n";
  ctx.out << "config_hash " << ctx.hash << "\n";
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"logsd: log anomaly detection with frequency-aware masking"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_file, "flat key = value config file");
    sub->add_option("--seed", o.seed, "override the run seed");
    sub->add_option("--out-dir", o.out_dir, "directory for default output paths");
    sub->add_option("--set", o.sets, "override a config key (key=value), repeatable");
    sub->add_option("--input", o.input, "input log file (parse)");
    sub->add_option("--out", o.out, "primary output path of the subcommand");
  };
  using Handler = int (*)(Context&, const Options&);
  const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
      {"parse", "parse a raw log into templates and a parsed TSV", cmd_parse},
      {"prepare", "group parsed records into train/test sequence sets", cmd_prepare},
      {"train", "train a model on the normal training sequences", cmd_train},
      {"score", "score the test sequences with a trained checkpoint", cmd_score},
      {"evaluate", "threshold and evaluate a score file", cmd_evaluate},
      {"ablate", "train and evaluate a list of variants", cmd_ablate},
      {"synth", "generate the synthetic skewed corpus", cmd_synth},
  };
  std::vector<std::pair<CLI::App*, Handler>> subs;
  for (const auto& [name, help, handler] : commands) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    subs.emplace_back(sub, handler);
  }

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    for (auto& [sub, handler] : subs) {
      if (!sub->parsed()) continue;
      auto* seed_opt = sub->get_option("--seed");
      o.seed_given = seed_opt->count() > 0;
      Context ctx{resolve_config(o), {}, 0, out};
      ctx.hash = ctx.cfg.hash_hex();
      ctx.seed = static_cast<std::uint64_t>(ctx.cfg.get_int("seed"));
      kernels::set_backend(kernels::parse_backend(ctx.cfg.get("simd")));
      return handler(ctx, o);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kConfigError;
}

}  // namespace logsd::cli
