#pragma once

// Detection metrics for ranked anomaly scores. A sequence is predicted
// anomalous when its score is >= the threshold.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "logsd/common.hpp"

namespace logsd::evaluation {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct Metrics {
  Confusion confusion;
  double mcc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ThresholdChoice {
  double threshold = 0.0;
  double f1 = 0.0;
};

/// Throws DataError naming the missing class when only one label occurs.
void require_both_classes(std::span<const Label> labels);

Metrics metrics_from_confusion(const Confusion& c);
Metrics confusion_and_metrics(std::span<const double> scores, std::span<const Label> labels,
                              double threshold);

/// Candidate thresholds: one below the minimum, midpoints between consecutive
/// distinct scores, one above the maximum. Ties go to the smaller threshold.
std::vector<double> candidate_thresholds(std::span<const double> scores);
ThresholdChoice threshold_max_f1(std::span<const double> scores, std::span<const Label> labels);

/// Mann-Whitney statistic with average ranks for ties.
double auroc(std::span<const double> scores, std::span<const Label> labels);
/// Average precision; tied scores enter the sweep as one step.
double auprc(std::span<const double> scores, std::span<const Label> labels);

/// Seeded fair coin per sequence.
std::vector<Label> random_detector(std::size_t n, std::uint64_t seed);

struct ScoredSequence {
  std::string seq_id;
  double score = 0.0;
  Label label = Label::kNormal;
};

struct ScoreFileHeader {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string variant;
};

/// seq_id,score,label
void write_scores(const std::filesystem::path& path, std::span<const ScoredSequence> rows,
                  const ScoreFileHeader& header);
std::vector<ScoredSequence> read_scores(const std::filesystem::path& path,
                                        ScoreFileHeader* header = nullptr);

struct ScoreReport {
  std::vector<ScoredSequence> rows;
  std::vector<Label> predicted;
  double threshold = 0.0;
  Metrics metrics;
  double auprc = 0.0;
  double auroc = 0.0;

  static ScoreReport build(std::vector<ScoredSequence> rows);
};

/// Report CSV (seq_id,score,label,predicted) headed by the threshold, the
/// metrics and the config snapshot lines, all as '#' comments.
void write_report(const std::filesystem::path& path, const ScoreReport& report,
                  const std::string& config_hash, const std::string& config_snapshot);
/// key = value lines.
void write_metrics(const std::filesystem::path& path, const ScoreReport& report,
                   const std::string& config_hash, std::uint64_t seed);

}  // namespace logsd::evaluation
