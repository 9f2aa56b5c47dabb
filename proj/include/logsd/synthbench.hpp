#pragma once

// Synthetic skewed corpus: one dominant event fills most training positions,
// so a plain reconstruction model learns the dominant event well and the rare
// ones poorly. Diverse sequences follow a few fixed workflows (ordered sets of
// distinct rare events); training sees the first half of each workflow's
// cyclic rotations and the test part the second half. Sequence ids encode
// their kind:
//   train-dom-<i>  dominant-heavy normal   train-div-<i>  diverse normal
//   test-dom-<i>   test-div-<i>            test-anom-<i>  diverse + unseen event

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "logsd/config.hpp"
#include "logsd/corpus.hpp"
#include "logsd/embedder.hpp"
#include "logsd/evaluation.hpp"
#include "logsd/masking.hpp"
#include "logsd/model.hpp"
#include "logsd/sequencer.hpp"
#include "logsd/trainer.hpp"

namespace logsd::synthbench {

struct SynthConfig {
  std::size_t n_train = 2000;
  std::size_t n_test_normal = 400;
  std::size_t n_test_anom = 100;
  std::size_t vocab_rare = 40;
  std::size_t dominant_events = 1;
  std::size_t unseen_events = 5;
  std::size_t seq_len = 8;
  double dominant_fill_prob = 0.9;
  double diverse_fraction = 0.2;       // of training sequences
  std::size_t diverse_patterns = 8;    // workflows
  double test_diverse_fraction = 0.5;  // of test normals
  std::uint64_t seed = 7;

  static SynthConfig from_config(const RunConfig& cfg);
  void validate() const;

  int first_rare_id() const { return static_cast<int>(dominant_events) + 1; }
  int first_unseen_id() const { return static_cast<int>(dominant_events + vocab_rare) + 1; }
};

struct SynthCorpus {
  sequencer::SplitDataset dataset;
  corpus::TemplateCatalog catalog;  // one template per id, unseen ids included
};

SynthCorpus generate(const SynthConfig& config);

bool is_diverse_normal(const sequencer::EventSequence& s);
bool is_anomaly(const sequencer::EventSequence& s);
/// Anomalies plus diverse normals: the hard subset where the dominant event
/// gives no help.
std::vector<sequencer::EventSequence> diverse_subset(
    std::span<const sequencer::EventSequence> test);

/// Every knob needed to train and score one variant.
struct Experiment {
  model::ModelConfig model;
  masking::MaskConfig mask;
  trainer::TrainConfig train;
  std::size_t embedding_dim = 32;
  std::uint64_t embedding_seed = 1234;

  static Experiment from_config(const RunConfig& cfg);
};

struct VariantOutcome {
  std::string code;
  std::size_t epochs = 0;
  std::vector<evaluation::ScoredSequence> scored;  // test order
  evaluation::ScoreReport report;
};

/// Trains `code` on the normal training sequences and scores the test part.
VariantOutcome run_variant(const sequencer::SplitDataset& dataset,
                           const embedder::EmbeddingTable& table, const Experiment& experiment,
                           const std::string& code);

struct AblationRow {
  std::string variant;
  std::size_t epochs = 0;
  double mcc = 0.0, f1 = 0.0, auprc = 0.0, auroc = 0.0;
};

/// Unknown codes are a ConfigError, raised before any training.
std::vector<AblationRow> run_ablation(const sequencer::SplitDataset& dataset,
                                      const embedder::EmbeddingTable& table,
                                      const Experiment& experiment,
                                      std::span<const std::string> variants);

void write_ablation_report(const std::filesystem::path& path, std::span<const AblationRow> rows,
                           const std::string& config_hash, std::uint64_t seed);

}  // namespace logsd::synthbench
