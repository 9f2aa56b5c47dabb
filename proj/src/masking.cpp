#include "logsd/masking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace logsd::masking {

void MaskConfig::validate() const {
  if (kappa_set.empty()) throw ConfigError("kappa set must not be empty");
  for (double k : kappa_set) {
    if (!(k > 0.0 && k < 1.0)) throw ConfigError("every kappa must lie in (0, 1)");
  }
  if (kappa_mode == KappaMode::kFixed && !(kappa_fixed > 0.0 && kappa_fixed < 1.0)) {
    throw ConfigError("kappa_fixed must lie in (0, 1)");
  }
}

std::vector<double> MaskConfig::inference_kappas() const {
  if (scheme == Scheme::kNone) return {1.0};
  if (kappa_mode == KappaMode::kFixed) return {kappa_fixed};
  return kappa_set;
}

Scheme parse_scheme(char code) {
  switch (code) {
    case 'n': return Scheme::kNone;
    case 'r': return Scheme::kRandom;
    case 'f': return Scheme::kFrequency;
    default: throw ConfigError(std::string("unknown masking code '") + code + "'");
  }
}

char scheme_code(Scheme s) {
  switch (s) {
    case Scheme::kNone: return 'n';
    case Scheme::kRandom: return 'r';
    case Scheme::kFrequency: return 'f';
  }
  return '?';
}

Counts batch_event_frequencies(std::span<const int> events,
                               std::span<const std::uint8_t> pad_mask) {
  Counts counts;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (pad_mask[i]) ++counts[events[i]];
  }
  return counts;
}

Counts batch_event_frequencies(const embedder::SequenceBatch& batch) {
  return batch_event_frequencies(batch.events, batch.pad_mask);
}

std::size_t focus_size(double kappa, std::size_t unique) {
  if (unique == 0) return 0;
  // The epsilon keeps products such as 0.3 * 10 from rounding up past 3.
  const double raw = std::ceil(kappa * static_cast<double>(unique) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, unique);
}

std::set<int> select_focus(const Counts& counts, double kappa, Scheme scheme, Rng& rng) {
  std::set<int> focus;
  if (scheme == Scheme::kNone) {
    for (const auto& [id, c] : counts) focus.insert(id);
    return focus;
  }
  const std::size_t k = focus_size(kappa, counts.size());
  std::vector<std::pair<std::size_t, int>> ranked;
  ranked.reserve(counts.size());
  for (const auto& [id, c] : counts) ranked.emplace_back(c, id);
  if (scheme == Scheme::kFrequency) {
    std::sort(ranked.begin(), ranked.end());
  } else {
    rng.shuffle(ranked.begin(), ranked.end());
  }
  for (std::size_t i = 0; i < k; ++i) focus.insert(ranked[i].second);
  return focus;
}

double sample_kappa(const MaskConfig& config, std::uint64_t batch_index) {
  if (config.kappa_mode == KappaMode::kFixed) return config.kappa_fixed;
  std::uint64_t state = derive_seed(config.seed, "kappa") ^ (batch_index * 0xd1b54a32d192ed03ULL);
  const std::uint64_t r = splitmix64(state);
  Rng rng(r);
  return config.kappa_set[rng.uniform_index(config.kappa_set.size())];
}

namespace {

void mark_positions(const embedder::SequenceBatch& batch, std::size_t row,
                    const std::set<int>& focus, nn::Mask& positions) {
  const std::size_t len = batch.length();
  for (std::size_t t = 0; t < len; ++t) {
    const std::size_t i = row * len + t;
    positions[i] = batch.pad_mask[i] && focus.count(batch.events[i]) ? 1 : 0;
  }
}

}  // namespace

MaskPlan plan_batch(const embedder::SequenceBatch& batch, Scheme scheme, double kappa,
                    std::uint64_t seed) {
  MaskPlan plan;
  plan.kappa_used = kappa;
  if (scheme == Scheme::kNone) {
    plan.focus_positions = batch.pad_mask;
    for (std::size_t i = 0; i < batch.events.size(); ++i) {
      if (batch.pad_mask[i]) plan.focus_events.insert(batch.events[i]);
    }
    return plan;
  }
  Rng rng(seed);
  plan.focus_events = select_focus(batch_event_frequencies(batch), kappa, scheme, rng);
  plan.focus_positions.assign(batch.pad_mask.size(), 0);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    mark_positions(batch, n, plan.focus_events, plan.focus_positions);
  }
  return plan;
}

FrequencyTable FrequencyTable::from_sequences(std::span<const sequencer::EventSequence> seqs) {
  Counts counts;
  for (const auto& s : seqs) {
    for (int id : s.event_ids) ++counts[id];
  }
  return FrequencyTable(std::move(counts));
}

std::size_t FrequencyTable::count(int event_id) const {
  auto it = counts_.find(event_id);
  return it == counts_.end() ? 0 : it->second;
}

MaskPlan plan_per_sequence(const embedder::SequenceBatch& batch, const FrequencyTable& table,
                           Scheme scheme, double kappa, std::uint64_t seed) {
  MaskPlan plan;
  plan.kappa_used = kappa;
  if (scheme == Scheme::kNone) {
    plan.focus_positions = batch.pad_mask;
    for (std::size_t i = 0; i < batch.events.size(); ++i) {
      if (batch.pad_mask[i]) plan.focus_events.insert(batch.events[i]);
    }
    return plan;
  }
  const std::size_t len = batch.length();
  plan.focus_positions.assign(batch.pad_mask.size(), 0);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    Counts row_counts;
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t i = n * len + t;
      if (batch.pad_mask[i]) row_counts[batch.events[i]] = table.count(batch.events[i]);
    }
    if (row_counts.empty()) continue;
    Rng rng(derive_seed(seed, batch.seq_ids[n] + "#" + format_double(kappa)));
    const auto focus = select_focus(row_counts, kappa, scheme, rng);
    mark_positions(batch, n, focus, plan.focus_positions);
    plan.focus_events.insert(focus.begin(), focus.end());
  }
  return plan;
}

namespace {

nn::Tensor zero_rows(const nn::Tensor& x, const MaskPlan& plan, bool zero_focus) {
  if (x.rank() != 3 || plan.focus_positions.size() != x.dim(0) * x.dim(1)) {
    throw std::invalid_argument("mask plan does not match tensor " + x.shape_string());
  }
  nn::Tensor out = x;
  const std::size_t d = x.dim(2);
  for (std::size_t r = 0; r < plan.focus_positions.size(); ++r) {
    const bool focus = plan.focus_positions[r] != 0;
    if (focus == zero_focus) std::fill(out.ptr() + r * d, out.ptr() + (r + 1) * d, 0.0);
  }
  return out;
}

}  // namespace

nn::Tensor apply_focus_mask(const nn::Tensor& x, const MaskPlan& plan) {
  return zero_rows(x, plan, true);
}

nn::Tensor apply_context_mask(const nn::Tensor& x, const MaskPlan& plan) {
  return zero_rows(x, plan, false);
}

}  // namespace logsd::masking
