#include "logsd/sequencer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace logsd::sequencer {

std::vector<int> dedup_consecutive(std::span<const int> event_ids) {
  std::vector<int> out;
  out.reserve(event_ids.size());
  for (int id : event_ids) {
    if (out.empty() || out.back() != id) out.push_back(id);
  }
  return out;
}

std::vector<corpus::LogRecord> dedup_records(std::span<const corpus::LogRecord> records,
                                             std::vector<std::size_t>* run_lengths) {
  std::vector<corpus::LogRecord> out;
  std::vector<std::size_t> runs;
  for (const auto& r : records) {
    if (!out.empty() && out.back().event_id == r.event_id) {
      if (r.label == Label::kAnomalous) out.back().label = Label::kAnomalous;
      ++runs.back();
      continue;
    }
    out.push_back(r);
    runs.push_back(1);
  }
  if (run_lengths) *run_lengths = std::move(runs);
  return out;
}

SessionGrouping group_by_session(std::span<const corpus::LogRecord> records,
                                 const corpus::SessionLabels& labels) {
  SessionGrouping out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : records) {
    if (r.session_key.empty()) {
      ++out.dropped_records;
      continue;
    }
    auto [it, inserted] = index.try_emplace(r.session_key, out.sequences.size());
    if (inserted) {
      auto lab = labels.find(r.session_key);
      if (lab == labels.end()) {
        throw DataError("session '" + r.session_key + "' has no entry in the label file");
      }
      EventSequence seq;
      seq.seq_id = r.session_key;
      seq.label = lab->second;
      seq.origin = Origin::kSession;
      seq.first_line = r.line_no;
      out.sequences.push_back(std::move(seq));
    }
    auto& seq = out.sequences[it->second];
    seq.event_ids.push_back(r.event_id);
    seq.last_line = r.line_no;
    ++seq.message_count;
  }
  return out;
}

WindowGrouping group_fixed_window(std::span<const corpus::LogRecord> records, std::size_t window,
                                  std::span<const std::size_t> run_lengths) {
  if (window < 2) throw ConfigError("window size must be >= 2");
  if (!run_lengths.empty() && run_lengths.size() != records.size()) {
    throw std::invalid_argument("run_lengths must align with records");
  }
  WindowGrouping out;
  for (std::size_t start = 0; start < records.size(); start += window) {
    const std::size_t end = std::min(records.size(), start + window);
    if (end - start < 2) {
      out.dropped_records += end - start;
      continue;
    }
    EventSequence seq;
    seq.seq_id = "w" + std::to_string(start / window);
    seq.origin = Origin::kEntryWindow;
    seq.window_size = window;
    seq.first_line = records[start].line_no;
    seq.last_line = records[end - 1].line_no;
    for (std::size_t i = start; i < end; ++i) {
      seq.event_ids.push_back(records[i].event_id);
      if (records[i].label == Label::kAnomalous) seq.label = Label::kAnomalous;
      seq.message_count += run_lengths.empty() ? 1 : run_lengths[i];
    }
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

SplitDataset split(std::vector<EventSequence> sequences, SplitStrategy strategy, double ratio,
                   std::uint64_t seed) {
  if (sequences.empty()) throw DataError("cannot split an empty sequence list");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("train ratio must lie in (0, 1)");
  SplitDataset ds;
  ds.strategy = strategy;
  ds.seed = seed;
  const std::size_t n = sequences.size();

  if (strategy == SplitStrategy::kChronological) {
    std::size_t total = 0;
    for (const auto& s : sequences) total += std::max<std::size_t>(s.message_count, 1);
    const double boundary = ratio * static_cast<double>(total);
    std::size_t offset = 0;
    std::size_t cut = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<double>(offset) >= boundary) {
        cut = i;
        break;
      }
      offset += std::max<std::size_t>(sequences[i].message_count, 1);
    }
    if (cut < n) ds.boundary_line = sequences[cut].first_line;
    ds.train.assign(std::make_move_iterator(sequences.begin()),
                    std::make_move_iterator(sequences.begin() + cut));
    ds.test.assign(std::make_move_iterator(sequences.begin() + cut),
                   std::make_move_iterator(sequences.end()));
    return ds;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order.begin(), order.end());
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  for (auto i : train_idx) ds.train.push_back(std::move(sequences[i]));
  for (auto i : test_idx) ds.test.push_back(std::move(sequences[i]));
  return ds;
}

NormalFilter filter_training_normals(std::span<const EventSequence> train) {
  NormalFilter out;
  for (const auto& s : train) {
    if (s.label == Label::kNormal) {
      out.normals.push_back(s);
    } else {
      ++out.discarded;
    }
  }
  if (out.normals.empty()) throw DataError("training split contains no normal sequences");
  return out;
}

SplitStrategy parse_split_strategy(const std::string& name) {
  if (name == "chronological") return SplitStrategy::kChronological;
  if (name == "random") return SplitStrategy::kRandom;
  throw ConfigError("split_strategy must be chronological or random; got '" + name + "'");
}

std::string split_strategy_name(SplitStrategy s) {
  return s == SplitStrategy::kChronological ? "chronological" : "random";
}

void write_dataset(const std::filesystem::path& path, std::span<const EventSequence> sequences,
                   const DatasetHeader& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset " + path.string());
  out << "# logsd-dataset v1\n";
  out << "# strategy=" << header.strategy << " window=" << header.window
      << " dedup=" << (header.dedup ? 1 : 0) << " seed=" << header.seed
      << " config_hash=" << header.config_hash << "\n";
  for (const auto& s : sequences) {
    out << s.seq_id << '\t' << label_to_int(s.label) << '\t';
    for (std::size_t i = 0; i < s.event_ids.size(); ++i) {
      if (i) out << ' ';
      out << s.event_ids[i];
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for dataset " + path.string());
}

std::vector<EventSequence> read_dataset(const std::filesystem::path& path,
                                        DatasetHeader* header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read dataset " + path.string());
  std::vector<EventSequence> out;
  DatasetHeader local;
  if (header == nullptr) header = &local;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      {
        std::istringstream hs(line.substr(1));
        std::string kv;
        while (hs >> kv) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) continue;
          const auto k = kv.substr(0, eq);
          const auto v = kv.substr(eq + 1);
          if (k == "strategy") header->strategy = v;
          if (k == "window") header->window = v;
          if (k == "dedup") header->dedup = v == "1";
          if (k == "seed") header->seed = std::stoull(v);
          if (k == "config_hash") header->config_hash = v;
        }
      }
      continue;
    }
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw DataError("dataset row needs 3 columns: " + line);
    EventSequence s;
    s.seq_id = line.substr(0, t1);
    const auto lab = line.substr(t1 + 1, t2 - t1 - 1);
    if (lab != "0" && lab != "1") throw DataError("dataset label must be 0 or 1: " + line);
    s.label = label_from_int(lab == "1");
    std::istringstream ids(line.substr(t2 + 1));
    long long id = 0;
    while (ids >> id) {
      if (id <= 0) throw DataError("event ids must be positive: " + line);
      s.event_ids.push_back(static_cast<int>(id));
    }
    if (!ids.eof()) throw DataError("non-numeric event id in: " + line);
    s.message_count = s.event_ids.size();
    out.push_back(std::move(s));
  }
  const Origin origin = header->strategy == "synthetic" ? Origin::kSynthetic
                        : header->window == "n/a"       ? Origin::kSession
                                                        : Origin::kEntryWindow;
  for (auto& s : out) s.origin = origin;
  return out;
}

DatasetStats compute_stats(std::span<const EventSequence> sequences) {
  DatasetStats st;
  std::set<int> events;
  for (const auto& s : sequences) {
    ++st.sequences;
    (s.label == Label::kNormal ? st.normal : st.anomalous) += 1;
    events.insert(s.event_ids.begin(), s.event_ids.end());
  }
  st.unique_events = events.size();
  return st;
}

}  // namespace logsd::sequencer
