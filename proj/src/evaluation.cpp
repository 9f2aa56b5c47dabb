#include "logsd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace logsd::evaluation {
namespace {

void check_sizes(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericError("non-finite anomaly score");
  }
}

double below(double v) {
  const double c = v - 1.0;
  return c < v ? c : std::nextafter(v, -std::numeric_limits<double>::infinity());
}

double above(double v) {
  const double c = v + 1.0;
  return c > v ? c : std::nextafter(v, std::numeric_limits<double>::infinity());
}

}  // namespace

void require_both_classes(std::span<const Label> labels) {
  bool normal = false, anomalous = false;
  for (auto l : labels) (l == Label::kAnomalous ? anomalous : normal) = true;
  if (!anomalous) throw DataError("evaluation needs at least one anomalous label; none found");
  if (!normal) throw DataError("evaluation needs at least one normal label; none found");
}

Metrics metrics_from_confusion(const Confusion& c) {
  Metrics m;
  m.confusion = c;
  const double tp = c.tp, fp = c.fp, tn = c.tn, fn = c.fn;
  m.precision = c.tp + c.fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = denom > 0.0 ? (tp * tn - fp * fn) / std::sqrt(denom) : 0.0;
  return m;
}

Metrics confusion_and_metrics(std::span<const double> scores, std::span<const Label> labels,
                              double threshold) {
  check_sizes(scores, labels);
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool truth = labels[i] == Label::kAnomalous;
    if (pred && truth) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_confusion(c);
}

std::vector<double> candidate_thresholds(std::span<const double> scores) {
  std::vector<double> distinct(scores.begin(), scores.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> out;
  if (distinct.empty()) return out;
  out.push_back(below(distinct.front()));
  for (std::size_t i = 1; i < distinct.size(); ++i) {
    const double a = distinct[i - 1], b = distinct[i];
    double mid = a + (b - a) / 2.0;
    // Adjacent doubles: the midpoint must still exclude a.
    if (!(mid > a)) mid = b;
    out.push_back(mid);
  }
  out.push_back(above(distinct.back()));
  return out;
}

ThresholdChoice threshold_max_f1(std::span<const double> scores, std::span<const Label> labels) {
  check_sizes(scores, labels);
  require_both_classes(labels);

  // Sweep candidates ascending; predicted-positive counts come from a sort.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  std::size_t total_pos = 0;
  for (auto l : labels) total_pos += l == Label::kAnomalous;
  const std::size_t total_neg = labels.size() - total_pos;

  const auto candidates = candidate_thresholds(scores);
  ThresholdChoice best{candidates.front(), -1.0};
  std::size_t below_pos = 0, below_neg = 0, k = 0;
  for (double theta : candidates) {
    while (k < order.size() && scores[order[k]] < theta) {
      (labels[order[k]] == Label::kAnomalous ? below_pos : below_neg) += 1;
      ++k;
    }
    Confusion c;
    c.tp = total_pos - below_pos;
    c.fp = total_neg - below_neg;
    c.fn = below_pos;
    c.tn = below_neg;
    const double f1 = metrics_from_confusion(c).f1;
    if (f1 > best.f1) best = {theta, f1};
  }
  return best;
}

double auroc(std::span<const double> scores, std::span<const Label> labels) {
  check_sizes(scores, labels);
  require_both_classes(labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == Label::kAnomalous) {
        rank_sum += avg_rank;
        ++pos;
      }
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double q = static_cast<double>(n - pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

double auprc(std::span<const double> scores, std::span<const Label> labels) {
  check_sizes(scores, labels);
  require_both_classes(labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::size_t total_pos = 0;
  for (auto l : labels) total_pos += l == Label::kAnomalous;
  // Sum precision * hits and divide once; clamp against rounding above 1.
  double weighted = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i, group_pos = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == Label::kAnomalous) ++group_pos;
      ++j;
    }
    tp += group_pos;
    fp += (j - i) - group_pos;
    if (group_pos > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      weighted += precision * static_cast<double>(group_pos);
    }
    i = j;
  }
  return std::min(1.0, weighted / static_cast<double>(total_pos));
}

std::vector<Label> random_detector(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("random_detector: n must be positive");
  Rng rng(derive_seed(seed, "random_detector"));
  std::vector<Label> out(n);
  for (auto& l : out) l = rng.coin() ? Label::kAnomalous : Label::kNormal;
  return out;
}

void write_scores(const std::filesystem::path& path, std::span<const ScoredSequence> rows,
                  const ScoreFileHeader& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write scores " + path.string());
  out << "# logsd-scores v1 config_hash=" << header.config_hash << " seed=" << header.seed
      << " variant=" << header.variant << "\n";
  out << "seq_id,score,label\n";
  for (const auto& r : rows) {
    out << r.seq_id << ',' << format_double(r.score) << ',' << label_to_int(r.label) << '\n';
  }
  if (!out) throw DataError("write failed for scores " + path.string());
}

std::vector<ScoredSequence> read_scores(const std::filesystem::path& path,
                                        ScoreFileHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open scores " + path.string());
  std::vector<ScoredSequence> rows;
  std::string line;
  std::size_t line_no = 0;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (header) {
        std::istringstream ss(line.substr(1));
        std::string field;
        while (ss >> field) {
          const auto eq = field.find('=');
          if (eq == std::string::npos) continue;
          const auto key = field.substr(0, eq), value = field.substr(eq + 1);
          if (key == "config_hash") header->config_hash = value;
          else if (key == "seed") header->seed = std::stoull(value);
          else if (key == "variant") header->variant = value;
        }
      }
      continue;
    }
    if (!saw_columns) {
      if (line != "seq_id,score,label") throw DataError("scores file lacks column header");
      saw_columns = true;
      continue;
    }
    const auto c1 = line.find(','), c2 = line.rfind(',');
    if (c1 == std::string::npos || c1 == c2) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed score row");
    }
    ScoredSequence r;
    r.seq_id = line.substr(0, c1);
    try {
      r.score = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad score");
    }
    const auto lab = line.substr(c2 + 1);
    if (lab != "0" && lab != "1") {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad label");
    }
    r.label = label_from_int(lab == "1");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError("scores file " + path.string() + " has no rows");
  return rows;
}

ScoreReport ScoreReport::build(std::vector<ScoredSequence> rows) {
  ScoreReport report;
  std::vector<double> scores;
  std::vector<Label> labels;
  for (const auto& r : rows) {
    scores.push_back(r.score);
    labels.push_back(r.label);
  }
  const auto choice = threshold_max_f1(scores, labels);
  report.threshold = choice.threshold;
  report.metrics = confusion_and_metrics(scores, labels, choice.threshold);
  report.auprc = evaluation::auprc(scores, labels);
  report.auroc = evaluation::auroc(scores, labels);
  for (double s : scores) {
    report.predicted.push_back(s >= report.threshold ? Label::kAnomalous : Label::kNormal);
  }
  report.rows = std::move(rows);
  return report;
}

void write_report(const std::filesystem::path& path, const ScoreReport& report,
                  const std::string& config_hash, const std::string& config_snapshot) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report " + path.string());
  const auto& m = report.metrics;
  out << "# logsd-report v1 config_hash=" << config_hash << "\n";
  out << "# threshold=" << format_double(report.threshold)
      << " convention=oracle-threshold (F1-maximizing on these scores)\n";
  out << "# mcc=" << format_double(m.mcc) << " precision=" << format_double(m.precision)
      << " recall=" << format_double(m.recall) << " f1=" << format_double(m.f1)
      << " auprc=" << format_double(report.auprc) << " auroc=" << format_double(report.auroc)
      << "\n";
  std::istringstream snap(config_snapshot);
  std::string line;
  while (std::getline(snap, line)) {
    if (!line.empty()) out << "# config: " << line << "\n";
  }
  out << "seq_id,score,label,predicted\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    out << r.seq_id << ',' << format_double(r.score) << ',' << label_to_int(r.label) << ','
        << label_to_int(report.predicted[i]) << '\n';
  }
  if (!out) throw DataError("write failed for report " + path.string());
}

void write_metrics(const std::filesystem::path& path, const ScoreReport& report,
                   const std::string& config_hash, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write metrics " + path.string());
  const auto& m = report.metrics;
  out << "config_hash = " << config_hash << "\n";
  out << "seed = " << seed << "\n";
  out << "threshold_convention = oracle-threshold\n";
  out << "threshold = " << format_double(report.threshold) << "\n";
  out << "tp = " << m.confusion.tp << "\nfp = " << m.confusion.fp << "\ntn = " << m.confusion.tn
      << "\nfn = " << m.confusion.fn << "\n";
  out << "mcc = " << format_double(m.mcc) << "\n";
  out << "precision = " << format_double(m.precision) << "\n";
  out << "recall = " << format_double(m.recall) << "\n";
  out << "f1 = " << format_double(m.f1) << "\n";
  out << "auprc = " << format_double(report.auprc) << "\n";
  out << "auroc = " << format_double(report.auroc) << "\n";
  if (!out) throw DataError("write failed for metrics " + path.string());
}

}  // namespace logsd::evaluation
