#pragma once

// Turns parsed records into labeled event sequences and train/test splits.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logsd/common.hpp"
#include "logsd/corpus.hpp"

namespace logsd::sequencer {

enum class Origin { kSession, kEntryWindow, kSynthetic };
enum class SplitStrategy { kChronological, kRandom };

struct EventSequence {
  std::string seq_id;
  std::vector<int> event_ids;
  Label label = Label::kNormal;
  Origin origin = Origin::kEntryWindow;
  std::size_t window_size = 0;  // 0 when not an entry window
  // Underlying log messages covered, including removed duplicates.
  std::size_t message_count = 0;
  std::size_t first_line = 0;
  std::size_t last_line = 0;
};

struct SplitDataset {
  std::vector<EventSequence> train;
  std::vector<EventSequence> test;
  SplitStrategy strategy = SplitStrategy::kChronological;
  std::uint64_t seed = 0;
  // Chronological splits: first line number that belongs to the test part.
  std::optional<std::size_t> boundary_line;
};

std::vector<int> dedup_consecutive(std::span<const int> event_ids);

/// Record-level dedup: a run of equal consecutive event ids collapses onto its
/// first record; the survivor is anomalous if any record in the run was.
/// `run_lengths`, if given, receives the number of raw records per survivor.
std::vector<corpus::LogRecord> dedup_records(std::span<const corpus::LogRecord> records,
                                             std::vector<std::size_t>* run_lengths = nullptr);

struct SessionGrouping {
  std::vector<EventSequence> sequences;
  std::size_t dropped_records = 0;
};

/// One sequence per session key in first-appearance order. Labels come from
/// the label file; a key missing from it is a DataError.
SessionGrouping group_by_session(std::span<const corpus::LogRecord> records,
                                 const corpus::SessionLabels& labels);

struct WindowGrouping {
  std::vector<EventSequence> sequences;
  std::size_t dropped_records = 0;
};

/// Non-overlapping windows of `window` records. A trailing partial window is
/// kept only if it has at least 2 events. Label is the OR of member labels.
WindowGrouping group_fixed_window(std::span<const corpus::LogRecord> records,
                                  std::size_t window,
                                  std::span<const std::size_t> run_lengths = {});

/// Train size = round(ratio * n), ties rounded up. Chronological splits place
/// the boundary at the ratio point of underlying messages; a sequence that
/// starts before that point goes to train.
SplitDataset split(std::vector<EventSequence> sequences, SplitStrategy strategy,
                   double ratio = 0.8, std::uint64_t seed = 0);

struct NormalFilter {
  std::vector<EventSequence> normals;
  std::size_t discarded = 0;
};

NormalFilter filter_training_normals(std::span<const EventSequence> train);

SplitStrategy parse_split_strategy(const std::string& name);
std::string split_strategy_name(SplitStrategy s);

struct DatasetHeader {
  std::string strategy = "n/a";
  std::string window = "n/a";
  bool dedup = false;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// One sequence per line: seq_id TAB label TAB space-separated ids, after
/// '#'-prefixed header lines.
void write_dataset(const std::filesystem::path& path, std::span<const EventSequence> sequences,
                   const DatasetHeader& header);
std::vector<EventSequence> read_dataset(const std::filesystem::path& path,
                                        DatasetHeader* header = nullptr);

struct DatasetStats {
  std::size_t sequences = 0;
  std::size_t unique_events = 0;
  std::size_t normal = 0;
  std::size_t anomalous = 0;
};

DatasetStats compute_stats(std::span<const EventSequence> sequences);

}  // namespace logsd::sequencer
