#include "logsd/synthbench.hpp"

#include <algorithm>
#include <fstream>

namespace logsd::synthbench {
namespace {

std::string letters(std::size_t n) {
  std::string s;
  do {
    s.insert(s.begin(), static_cast<char>('a' + n % 26));
    n /= 26;
  } while (n > 0);
  return s;
}

sequencer::EventSequence make_sequence(std::string id, std::vector<int> events, Label label) {
  sequencer::EventSequence s;
  s.seq_id = std::move(id);
  s.message_count = events.size();
  s.event_ids = std::move(events);
  s.label = label;
  s.origin = sequencer::Origin::kSynthetic;
  return s;
}

class Generator {
 public:
  Generator(const SynthConfig& c) : c_(c), rng_(derive_seed(c.seed, "synth")) {}

  int rare() { return c_.first_rare_id() + static_cast<int>(rng_.uniform_index(c_.vocab_rare)); }
  int dominant() { return 1 + static_cast<int>(rng_.uniform_index(c_.dominant_events)); }

  std::vector<int> dominant_heavy() {
    std::vector<int> seq(c_.seq_len);
    const auto anchor = rng_.uniform_index(c_.seq_len);
    for (std::size_t t = 0; t < c_.seq_len; ++t) {
      if (t == anchor) seq[t] = rare();
      else seq[t] = rng_.uniform01() < c_.dominant_fill_prob ? dominant() : rare();
    }
    return seq;
  }

  // seq_len distinct rare events in random order.
  std::vector<int> workflow() {
    std::vector<int> pool(c_.vocab_rare);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = c_.first_rare_id() + static_cast<int>(i);
    rng_.shuffle(pool.begin(), pool.end());
    pool.resize(c_.seq_len);
    return pool;
  }

  // A workflow rotated by an offset from [lo, hi).
  std::vector<int> diverse(const std::vector<std::vector<int>>& workflows, std::size_t lo,
                           std::size_t hi) {
    auto seq = workflows[rng_.uniform_index(workflows.size())];
    const auto shift = lo + rng_.uniform_index(hi - lo);
    std::rotate(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(shift), seq.end());
    return seq;
  }

  void inject_unseen(std::vector<int>& seq) {
    const auto pos = rng_.uniform_index(seq.size());
    seq[pos] = c_.first_unseen_id() + static_cast<int>(rng_.uniform_index(c_.unseen_events));
  }

  bool coin(double p) { return rng_.uniform01() < p; }

 private:
  const SynthConfig& c_;
  Rng rng_;
};

}  // namespace

SynthConfig SynthConfig::from_config(const RunConfig& cfg) {
  SynthConfig c;
  c.n_train = static_cast<std::size_t>(cfg.get_int("synth_n_train"));
  c.n_test_normal = static_cast<std::size_t>(cfg.get_int("synth_n_test_normal"));
  c.n_test_anom = static_cast<std::size_t>(cfg.get_int("synth_n_test_anom"));
  c.vocab_rare = static_cast<std::size_t>(cfg.get_int("synth_vocab_rare"));
  c.dominant_events = static_cast<std::size_t>(cfg.get_int("synth_dominant_events"));
  c.unseen_events = static_cast<std::size_t>(cfg.get_int("synth_unseen_events"));
  c.seq_len = static_cast<std::size_t>(cfg.get_int("synth_seq_len"));
  c.dominant_fill_prob = cfg.get_double("synth_dominant_fill_prob");
  c.diverse_fraction = cfg.get_double("synth_diverse_fraction");
  c.diverse_patterns = static_cast<std::size_t>(cfg.get_int("synth_diverse_patterns"));
  c.test_diverse_fraction = cfg.get_double("synth_test_diverse_fraction");
  c.seed = static_cast<std::uint64_t>(cfg.get_int("synth_seed"));
  c.validate();
  return c;
}

void SynthConfig::validate() const {
  if (n_train == 0) throw ConfigError("synth_n_train must be positive");
  if (n_test_normal == 0 || n_test_anom == 0) {
    throw ConfigError("synthetic test set needs both normal and anomalous sequences");
  }
  if (dominant_events == 0) throw ConfigError("synth_dominant_events must be positive");
  if (unseen_events == 0) throw ConfigError("synth_unseen_events must be positive");
  if (seq_len < 2) throw ConfigError("synth_seq_len must be at least 2");
  if (diverse_patterns == 0) throw ConfigError("synth_diverse_patterns must be positive");
  if (vocab_rare < seq_len) {
    throw ConfigError("synth_vocab_rare (" + std::to_string(vocab_rare) +
                      ") is too small to build diverse sequences of length " +
                      std::to_string(seq_len));
  }
  for (double p : {dominant_fill_prob, diverse_fraction, test_diverse_fraction}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("synthetic probabilities must lie in [0, 1]");
  }
}

SynthCorpus generate(const SynthConfig& config) {
  config.validate();
  Generator gen(config);
  SynthCorpus out{{}, corpus::TemplateCatalog{}};
  const std::size_t total_ids = config.dominant_events + config.vocab_rare + config.unseen_events;
  for (std::size_t id = 1; id <= total_ids; ++id) out.catalog.add_template("evt" + letters(id));

  auto& ds = out.dataset;
  ds.strategy = sequencer::SplitStrategy::kRandom;
  ds.seed = config.seed;

  std::vector<std::vector<int>> workflows;
  for (std::size_t p = 0; p < config.diverse_patterns; ++p) workflows.push_back(gen.workflow());
  const std::size_t half = config.seq_len / 2;

  const auto n_div = static_cast<std::size_t>(config.diverse_fraction * config.n_train + 0.5);
  std::size_t dom_count = 0, div_count = 0;
  for (std::size_t i = 0; i < config.n_train; ++i) {
    // Interleave the two kinds so no prefix is homogeneous.
    const bool diverse = (i + 1) * n_div / config.n_train > i * n_div / config.n_train;
    if (diverse) {
      ds.train.push_back(make_sequence("train-div-" + std::to_string(div_count++),
                                       gen.diverse(workflows, 0, half), Label::kNormal));
    } else {
      ds.train.push_back(make_sequence("train-dom-" + std::to_string(dom_count++),
                                       gen.dominant_heavy(), Label::kNormal));
    }
  }

  const auto n_test_div =
      static_cast<std::size_t>(config.test_diverse_fraction * config.n_test_normal + 0.5);
  std::size_t td = 0, tm = 0;
  for (std::size_t i = 0; i < config.n_test_normal; ++i) {
    const bool diverse =
        (i + 1) * n_test_div / config.n_test_normal > i * n_test_div / config.n_test_normal;
    if (diverse) {
      ds.test.push_back(make_sequence("test-div-" + std::to_string(td++),
                                      gen.diverse(workflows, half, config.seq_len),
                                      Label::kNormal));
    } else {
      ds.test.push_back(
          make_sequence("test-dom-" + std::to_string(tm++), gen.dominant_heavy(), Label::kNormal));
    }
  }
  for (std::size_t i = 0; i < config.n_test_anom; ++i) {
    auto seq = gen.diverse(workflows, half, config.seq_len);
    gen.inject_unseen(seq);
    ds.test.push_back(
        make_sequence("test-anom-" + std::to_string(i), std::move(seq), Label::kAnomalous));
  }
  // Mix anomalies among normals deterministically.
  Rng order_rng(derive_seed(config.seed, "synth.order"));
  order_rng.shuffle(ds.test.begin(), ds.test.end());
  return out;
}

bool is_diverse_normal(const sequencer::EventSequence& s) {
  return s.label == Label::kNormal && s.seq_id.find("-div-") != std::string::npos;
}

bool is_anomaly(const sequencer::EventSequence& s) { return s.label == Label::kAnomalous; }

std::vector<sequencer::EventSequence> diverse_subset(
    std::span<const sequencer::EventSequence> test) {
  std::vector<sequencer::EventSequence> out;
  for (const auto& s : test) {
    if (is_anomaly(s) || is_diverse_normal(s)) out.push_back(s);
  }
  return out;
}

Experiment Experiment::from_config(const RunConfig& cfg) {
  Experiment e;
  e.embedding_dim = static_cast<std::size_t>(cfg.get_int("embedding_dim"));
  e.embedding_seed = static_cast<std::uint64_t>(cfg.get_int("embedding_seed"));
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));

  e.model.dim = e.embedding_dim;
  e.model.hidden = static_cast<std::size_t>(cfg.get_int("hidden"));
  e.model.kernels = cfg.get_int_list("kernels");
  e.model.alpha = cfg.get_double("alpha");
  e.model.variant = model::Variant::parse(cfg.get("variant"));
  e.model.validate();

  e.mask.scheme = e.model.variant.masking;
  e.mask.kappa_set = cfg.get_double_list("kappa_set");
  const auto& mode = cfg.get("kappa_mode");
  if (mode == "sampled") e.mask.kappa_mode = masking::KappaMode::kSampled;
  else if (mode == "fixed") e.mask.kappa_mode = masking::KappaMode::kFixed;
  else throw ConfigError("kappa_mode must be sampled or fixed, got '" + mode + "'");
  e.mask.kappa_fixed = cfg.get_double("kappa_fixed");
  e.mask.seed = derive_seed(seed, "mask");
  e.mask.validate();

  auto count = [&](const char* key) {
    const auto v = cfg.get_int(key);
    if (v < 0) throw ConfigError(std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  e.train.lr_start = cfg.get_double("lr_start");
  e.train.lr_end = cfg.get_double("lr_end");
  e.train.decay_power = cfg.get_double("decay_power");
  e.train.weight_decay = cfg.get_double("weight_decay");
  e.train.batch_size = count("batch_size");
  e.train.max_epochs = count("max_epochs");
  e.train.patience = count("patience");
  e.train.min_rel_improvement = cfg.get_double("min_rel_improvement");
  e.train.max_seq_len = count("max_seq_len");
  e.train.seed = seed;
  e.train.validate();
  return e;
}

VariantOutcome run_variant(const sequencer::SplitDataset& dataset,
                           const embedder::EmbeddingTable& table, const Experiment& experiment,
                           const std::string& code) {
  Experiment e = experiment;
  e.model.variant = model::Variant::parse(code);
  e.mask.scheme = e.model.variant.masking;

  const auto normals = sequencer::filter_training_normals(dataset.train).normals;
  const auto trained = trainer::train(normals, table, e.model, e.mask, e.train);
  const auto scores = model::sequence_scores(trained.model, trained.frequencies, e.mask,
                                             dataset.test, table, e.train.max_seq_len,
                                             e.train.batch_size);
  VariantOutcome out;
  out.code = e.model.variant.code();
  out.epochs = trained.log.size();
  for (std::size_t i = 0; i < dataset.test.size(); ++i) {
    out.scored.push_back({dataset.test[i].seq_id, scores[i], dataset.test[i].label});
  }
  out.report = evaluation::ScoreReport::build(out.scored);
  return out;
}

std::vector<AblationRow> run_ablation(const sequencer::SplitDataset& dataset,
                                      const embedder::EmbeddingTable& table,
                                      const Experiment& experiment,
                                      std::span<const std::string> variants) {
  if (variants.empty()) throw ConfigError("ablation needs at least one variant");
  for (const auto& v : variants) model::Variant::parse(v);
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    const auto outcome = run_variant(dataset, table, experiment, v);
    const auto& r = outcome.report;
    rows.push_back({outcome.code, outcome.epochs, r.metrics.mcc, r.metrics.f1, r.auprc, r.auroc});
  }
  return rows;
}

void write_ablation_report(const std::filesystem::path& path, std::span<const AblationRow> rows,
                           const std::string& config_hash, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write ablation report " + path.string());
  out << "# logsd-ablation v1 config_hash=" << config_hash << " seed=" << seed
      << " threshold_convention=oracle-threshold\n";
  out << "variant,epochs,mcc,f1,auprc,auroc\n";
  for (const auto& r : rows) {
    out << r.variant << ',' << r.epochs << ',' << format_double(r.mcc) << ','
        << format_double(r.f1) << ',' << format_double(r.auprc) << ',' << format_double(r.auroc)
        << '\n';
  }
  if (!out) throw DataError("write failed for ablation report " + path.string());
}

}  // namespace logsd::synthbench
