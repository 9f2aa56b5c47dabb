#pragma once
// Brute-force reference implementations used by unit and acceptance tests.
// They follow the metric and masking definitions directly and share no code
// with the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "logsd/common.hpp"

namespace logsd::oracle {

// Sort (count, id) pairs and take the first ceil(kappa * U).
inline std::set<int> focus(const std::map<int, std::size_t>& counts, double kappa) {
  std::vector<std::pair<std::size_t, int>> v;
  for (auto [id, c] : counts) v.emplace_back(c, id);
  std::sort(v.begin(), v.end());
  auto k = static_cast<std::size_t>(std::ceil(kappa * static_cast<double>(v.size())));
  if (k == 0 && !v.empty()) k = 1;
  std::set<int> out;
  for (std::size_t i = 0; i < k && i < v.size(); ++i) out.insert(v[i].second);
  return out;
}

inline double f1_at(const std::vector<double>& s, const std::vector<Label>& l, double th) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool pred = s[i] >= th, pos = l[i] == Label::kAnomalous;
    tp += pred && pos;
    fp += pred && !pos;
    fn += !pred && pos;
  }
  return tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

// Every distinct score as a threshold, plus +inf for predicting nothing.
inline double best_f1(const std::vector<double>& s, const std::vector<Label>& l) {
  double best = f1_at(s, l, INFINITY);
  for (double th : s) best = std::max(best, f1_at(s, l, th));
  return best;
}

// Pairwise count with ties worth one half.
inline double auroc(const std::vector<double>& s, const std::vector<Label>& l) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (l[i] != Label::kAnomalous || l[j] != Label::kNormal) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  return wins / pairs;
}

// Step integration over every distinct score, highest first: recall gained at
// each threshold times the precision there.
inline double auprc(const std::vector<double>& s, const std::vector<Label>& l) {
  std::vector<double> th(s.begin(), s.end());
  std::sort(th.begin(), th.end(), std::greater<>());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  double pos = 0;
  for (auto x : l) pos += x == Label::kAnomalous;
  double prev_recall = 0, area = 0;
  for (double t : th) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] < t) continue;
      (l[i] == Label::kAnomalous ? tp : fp) += 1;
    }
    const double recall = tp / pos;
    area += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return area;
}

inline double mcc(double tp, double fp, double tn, double fn) {
  const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  return den == 0 ? 0.0 : (tp * tn - fp * fn) / den;
}

}  // namespace logsd::oracle
