#pragma once

// Event-template embeddings and padded numeric batches.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "logsd/corpus.hpp"
#include "logsd/sequencer.hpp"
#include "logsd/tensor_nn.hpp"

namespace logsd::embedder {

inline constexpr std::size_t kDefaultDim = 32;

/// Splits on non-alphanumerics and camelCase boundaries, lowercases, drops
/// pure numbers. Never returns an empty list ("empty" is the fallback token).
std::vector<std::string> tokenize_template(std::string_view template_text);

/// Pseudorandom token vector, uniform in [-sqrt(3), sqrt(3)] per component
/// (unit variance), keyed by FNV-1a(token) and the seed.
std::vector<double> hashed_token_vector(std::string_view token, std::uint64_t seed,
                                        std::size_t dim);

using WordVectors = std::unordered_map<std::string, std::vector<double>>;

/// Text file, one "token v1 ... v_dim" per line. Malformed lines are fatal.
WordVectors load_word_vectors(const std::filesystem::path& path, std::size_t dim);

enum class Source { kHashed, kExternalFile };

class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, std::uint64_t token_seed, Source source = Source::kHashed);

  /// Builds vectors for every template in the catalog.
  static EmbeddingTable from_catalog(const corpus::TemplateCatalog& catalog, std::size_t dim,
                                     std::uint64_t token_seed,
                                     const WordVectors* external = nullptr);

  /// Mean of the token vectors of a template.
  static std::vector<double> embed_event(std::string_view template_text, std::size_t dim,
                                         std::uint64_t token_seed,
                                         const WordVectors* external = nullptr);

  void set(int event_id, std::span<const double> vec);
  bool contains(int event_id) const;
  /// Event 0 (padding) is the zero vector. Unknown ids throw DataError.
  std::span<const double> vector(int event_id) const;

  std::size_t dim() const { return dim_; }
  std::uint64_t token_seed() const { return token_seed_; }
  Source source() const { return source_; }
  /// Largest id with a stored vector.
  int max_id() const { return static_cast<int>(present_.size()) - 1; }

 private:
  std::size_t dim_;
  std::uint64_t token_seed_;
  Source source_;
  std::vector<double> data_;     // row per id, row 0 all zeros
  std::vector<bool> present_;
};

struct SequenceBatch {
  nn::Tensor x;                  // N x L x d
  std::vector<int> events;       // N x L, 0 = padding
  nn::Mask pad_mask;             // N x L, 1 = real event
  std::vector<std::string> seq_ids;
  std::vector<Label> labels;
  std::vector<std::size_t> lengths;
  std::size_t truncated = 0;

  std::size_t size() const { return x.rank() ? x.dim(0) : 0; }
  std::size_t length() const { return x.rank() ? x.dim(1) : 0; }
  std::size_t dim() const { return x.rank() ? x.dim(2) : 0; }
};

/// Right-pads to the longest sequence (capped at l_max) and truncates longer
/// ones to their first l_max events.
SequenceBatch build_batch(std::span<const sequencer::EventSequence> sequences,
                          const EmbeddingTable& table, std::size_t l_max);
SequenceBatch build_batch(std::span<const sequencer::EventSequence* const> sequences,
                          const EmbeddingTable& table, std::size_t l_max);

}  // namespace logsd::embedder
