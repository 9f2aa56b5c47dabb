#include "logsd/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

namespace logsd::embedder {
namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }

void push_word(std::string word, std::vector<std::string>& out) {
  if (word.empty()) return;
  if (std::all_of(word.begin(), word.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; })) {
    return;
  }
  for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  out.push_back(std::move(word));
}

}  // namespace

std::vector<std::string> tokenize_template(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_alnum(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && is_alnum(text[i])) ++i;
    const std::string_view run = text.substr(start, i - start);
    // camelCase: split before an upper letter that follows a lower letter or
    // digit, and before the last upper of an acronym followed by lower.
    std::size_t piece = 0;
    for (std::size_t j = 1; j < run.size(); ++j) {
      const bool lower_to_upper = is_upper(run[j]) && (is_lower(run[j - 1]));
      const bool acronym_end =
          is_upper(run[j]) && is_upper(run[j - 1]) && j + 1 < run.size() && is_lower(run[j + 1]);
      if (lower_to_upper || acronym_end) {
        push_word(std::string(run.substr(piece, j - piece)), out);
        piece = j;
      }
    }
    if (piece < run.size()) push_word(std::string(run.substr(piece)), out);
  }
  if (out.empty()) out.emplace_back("empty");
  return out;
}

std::vector<double> hashed_token_vector(std::string_view token, std::uint64_t seed,
                                        std::size_t dim) {
  std::uint64_t state = fnv1a64(token) ^ (seed * 0x9e3779b97f4a7c15ULL);
  const double scale = std::sqrt(3.0);
  std::vector<double> v(dim);
  for (auto& x : v) {
    const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    x = (2.0 * u - 1.0) * scale;
  }
  return v;
}

WordVectors load_word_vectors(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read word-vector file " + path.string());
  WordVectors out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = corpus::split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() != dim + 1) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected token and " +
                      std::to_string(dim) + " values, found " +
                      std::to_string(fields.size() - 1));
    }
    std::vector<double> v(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const auto& f = fields[j + 1];
      auto res = std::from_chars(f.data(), f.data() + f.size(), v[j]);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v[j])) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad value '" + f +
                        "'");
      }
    }
    out[fields[0]] = std::move(v);
  }
  return out;
}

EmbeddingTable::EmbeddingTable(std::size_t dim, std::uint64_t token_seed, Source source)
    : dim_(dim), token_seed_(token_seed), source_(source), data_(dim, 0.0), present_{true} {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
}

std::vector<double> EmbeddingTable::embed_event(std::string_view template_text, std::size_t dim,
                                                std::uint64_t token_seed,
                                                const WordVectors* external) {
  const auto tokens = tokenize_template(template_text);
  std::vector<double> acc(dim, 0.0);
  for (const auto& tok : tokens) {
    if (external) {
      auto it = external->find(tok);
      if (it != external->end()) {
        for (std::size_t j = 0; j < dim; ++j) acc[j] += it->second[j];
        continue;
      }
    }
    const auto v = hashed_token_vector(tok, token_seed, dim);
    for (std::size_t j = 0; j < dim; ++j) acc[j] += v[j];
  }
  const double inv = 1.0 / static_cast<double>(tokens.size());
  for (auto& x : acc) x *= inv;
  return acc;
}

EmbeddingTable EmbeddingTable::from_catalog(const corpus::TemplateCatalog& catalog,
                                            std::size_t dim, std::uint64_t token_seed,
                                            const WordVectors* external) {
  EmbeddingTable table(dim, token_seed, external ? Source::kExternalFile : Source::kHashed);
  for (std::size_t id = 1; id <= catalog.size(); ++id) {
    const auto v = embed_event(catalog.template_text(static_cast<int>(id)), dim, token_seed,
                               external);
    table.set(static_cast<int>(id), v);
  }
  return table;
}

void EmbeddingTable::set(int event_id, std::span<const double> vec) {
  if (event_id <= 0) throw std::invalid_argument("embedding ids start at 1");
  if (vec.size() != dim_) throw std::invalid_argument("embedding vector has wrong dimension");
  const auto id = static_cast<std::size_t>(event_id);
  if (id >= present_.size()) {
    present_.resize(id + 1, false);
    data_.resize((id + 1) * dim_, 0.0);
  }
  std::copy(vec.begin(), vec.end(), data_.begin() + static_cast<std::ptrdiff_t>(id * dim_));
  present_[id] = true;
}

bool EmbeddingTable::contains(int event_id) const {
  return event_id >= 0 && static_cast<std::size_t>(event_id) < present_.size() &&
         present_[static_cast<std::size_t>(event_id)];
}

std::span<const double> EmbeddingTable::vector(int event_id) const {
  if (!contains(event_id)) {
    throw DataError("no embedding for event id " + std::to_string(event_id));
  }
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(event_id) * dim_, dim_);
}

SequenceBatch build_batch(std::span<const sequencer::EventSequence* const> sequences,
                          const EmbeddingTable& table, std::size_t l_max) {
  if (sequences.empty()) throw std::invalid_argument("build_batch: no sequences");
  if (l_max == 0) throw ConfigError("max sequence length must be positive");
  std::size_t len = 0;
  for (const auto* s : sequences) len = std::max(len, s->event_ids.size());
  len = std::min(len, l_max);
  const std::size_t n = sequences.size(), d = table.dim();

  SequenceBatch b;
  b.x = nn::Tensor({n, len, d});
  b.events.assign(n * len, 0);
  b.pad_mask.assign(n * len, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = *sequences[i];
    b.seq_ids.push_back(s.seq_id);
    b.labels.push_back(s.label);
    const std::size_t used = std::min(s.event_ids.size(), len);
    if (s.event_ids.size() > len) ++b.truncated;
    b.lengths.push_back(used);
    for (std::size_t t = 0; t < used; ++t) {
      const int id = s.event_ids[t];
      b.events[i * len + t] = id;
      b.pad_mask[i * len + t] = 1;
      const auto v = table.vector(id);
      std::copy(v.begin(), v.end(), b.x.ptr() + (i * len + t) * d);
    }
  }
  return b;
}

SequenceBatch build_batch(std::span<const sequencer::EventSequence> sequences,
                          const EmbeddingTable& table, std::size_t l_max) {
  std::vector<const sequencer::EventSequence*> ptrs;
  ptrs.reserve(sequences.size());
  for (const auto& s : sequences) ptrs.push_back(&s);
  return build_batch(std::span<const sequencer::EventSequence* const>(ptrs), table, l_max);
}

}  // namespace logsd::embedder
