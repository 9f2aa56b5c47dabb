#pragma once

// Focus/context partition of batch events and the two masks derived from it.
//
// Focus events are the infrequent ones: the ceil(kappa * U) unique events with
// the lowest occurrence counts (ties by ascending id). Focus masking zeroes
// them to build the encoder-only input X_c; context masking zeroes everything
// else to build the reconstruction target X_f. X_f + X_c = X.

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "logsd/common.hpp"
#include "logsd/embedder.hpp"
#include "logsd/sequencer.hpp"
#include "logsd/tensor_nn.hpp"

namespace logsd::masking {

enum class Scheme { kNone, kRandom, kFrequency };
enum class KappaMode { kSampled, kFixed };

inline const std::vector<double> kDefaultKappaSet = {0.05, 0.1, 0.15, 0.2, 0.3};

struct MaskConfig {
  Scheme scheme = Scheme::kFrequency;
  std::vector<double> kappa_set = kDefaultKappaSet;
  KappaMode kappa_mode = KappaMode::kSampled;
  double kappa_fixed = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  /// Ratios the inference ensemble averages over.
  std::vector<double> inference_kappas() const;
};

Scheme parse_scheme(char code);
char scheme_code(Scheme s);

using Counts = std::map<int, std::size_t>;

struct MaskPlan {
  std::set<int> focus_events;
  nn::Mask focus_positions;  // N x L, only ever set at real positions
  double kappa_used = 0.0;
};

/// Occurrences over non-pad positions.
Counts batch_event_frequencies(std::span<const int> events, std::span<const std::uint8_t> pad_mask);
Counts batch_event_frequencies(const embedder::SequenceBatch& batch);

/// ceil(kappa * unique), at least 1 when unique > 0.
std::size_t focus_size(double kappa, std::size_t unique);

/// Frequency: lowest counts first, ties by id. Random: uniform draw without
/// replacement. None: every event.
std::set<int> select_focus(const Counts& counts, double kappa, Scheme scheme, Rng& rng);

/// Uniform draw from K, a pure function of (seed, batch index). Fixed mode
/// returns kappa_fixed.
double sample_kappa(const MaskConfig& config, std::uint64_t batch_index);

/// Batch-level plan used during training.
MaskPlan plan_batch(const embedder::SequenceBatch& batch, Scheme scheme, double kappa,
                    std::uint64_t seed);

/// Occurrence counts frozen over the training set. Unseen events count 0.
class FrequencyTable {
 public:
  FrequencyTable() = default;
  explicit FrequencyTable(Counts counts) : counts_(std::move(counts)) {}
  static FrequencyTable from_sequences(std::span<const sequencer::EventSequence> sequences);

  std::size_t count(int event_id) const;
  const Counts& counts() const { return counts_; }

 private:
  Counts counts_;
};

/// Inference plan: each sequence selects its own focus from its unique events
/// ranked by the frozen training counts, so a sequence's plan does not depend
/// on the rest of the batch. The random scheme seeds per sequence id.
MaskPlan plan_per_sequence(const embedder::SequenceBatch& batch, const FrequencyTable& table,
                           Scheme scheme, double kappa, std::uint64_t seed);

/// Zeroes rows at focus positions.
nn::Tensor apply_focus_mask(const nn::Tensor& x, const MaskPlan& plan);
/// Zeroes every row that is not a focus position.
nn::Tensor apply_context_mask(const nn::Tensor& x, const MaskPlan& plan);

}  // namespace logsd::masking
