#pragma once

// Raw log ingestion and Drain-style template mining.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "logsd/common.hpp"

namespace logsd {
class RunConfig;
}

namespace logsd::corpus {

inline constexpr std::string_view kWildcard = "<*>";

enum class LabelRule {
  kDashNormal,   // first whitespace token "-" => normal, anything else anomalous
  kSessionFile,  // label looked up from a session label file by session key
  kNone,         // every line normal
};

struct FormatProfile {
  LabelRule label_rule = LabelRule::kDashNormal;
  // Number of leading whitespace-separated fields before the message body.
  std::size_t content_start = 9;
  // Empty means no session keys.
  std::string session_regex;
  std::filesystem::path session_labels;

  static FormatProfile bgl();
  static FormatProfile hdfs(std::filesystem::path labels);
  static FormatProfile from_config(const RunConfig& cfg);
};

struct RawLine {
  std::size_t line_no = 0;
  Label label = Label::kNormal;
  std::string session_key;
  std::string content;
  bool malformed = false;
};

struct LoadReport {
  std::size_t lines = 0;
  std::size_t malformed = 0;
};

using SessionLabels = std::unordered_map<std::string, Label>;

/// Reads "BlockId,Label" style CSV; labels "Anomaly"/"Normal" or 1/0.
SessionLabels load_session_labels(const std::filesystem::path& path);

/// Streams a raw log file line by line according to a FormatProfile.
class LineReader {
 public:
  LineReader(const std::filesystem::path& path, FormatProfile profile);

  std::optional<RawLine> next();
  const LoadReport& report() const { return report_; }

 private:
  std::ifstream in_;
  FormatProfile profile_;
  std::optional<std::regex> session_re_;
  SessionLabels session_labels_;
  LoadReport report_;
};

std::vector<RawLine> load_raw_lines(const std::filesystem::path& path,
                                    const FormatProfile& profile, LoadReport* report = nullptr);

struct DrainParams {
  int depth = 4;
  double sim_threshold = 0.4;
  std::size_t max_children = 100;
};

struct ParseResult {
  int event_id = 0;
  std::string template_text;
  std::vector<std::string> params;
};

struct LogRecord {
  std::size_t line_no = 0;
  Label label = Label::kNormal;
  int event_id = 0;
  std::string template_text;
  std::vector<std::string> params;
  std::string session_key;
};

/// True when a token is a variable under the pre-masking rules: decimal and
/// hex numbers, IPv4 addresses (optionally with port), block ids, paths.
bool is_variable_token(std::string_view token);

std::vector<std::string> split_whitespace(std::string_view text);

/// Fraction of positions holding equal tokens; 0 when lengths differ.
double token_similarity(std::span<const std::string> a, std::span<const std::string> b);

/// Template store plus the fixed-depth parse tree (root -> token count ->
/// leading tokens -> leaf clusters). Event ids are dense, starting at 1.
class TemplateCatalog {
 public:
  explicit TemplateCatalog(DrainParams params = {});

  ParseResult parse(std::string_view content);
  /// Read-only lookup against the current templates; nullopt if no template in
  /// the routed leaf clears the similarity threshold.
  std::optional<ParseResult> match(std::string_view content) const;

  /// Appends a template verbatim and returns its id.
  int add_template(std::string_view template_text);

  std::size_t size() const { return clusters_.size(); }
  const std::string& template_text(int event_id) const;
  const DrainParams& params() const { return params_; }

  void save(const std::filesystem::path& path, const std::string& config_hash = {}) const;
  static TemplateCatalog load(const std::filesystem::path& path);

 private:
  struct Cluster {
    std::vector<std::string> tokens;
    std::string text;
  };
  struct Node {
    std::map<std::string, std::size_t> children;
    std::vector<int> clusters;
  };

  std::size_t route(const std::vector<std::string>& tokens);
  std::optional<std::size_t> route_const(const std::vector<std::string>& tokens) const;
  std::size_t child_or_create(std::size_t node, const std::string& key);
  int best_cluster(const Node& leaf, const std::vector<std::string>& tokens, double* sim) const;
  ParseResult make_result(int id, const std::vector<std::string>& original) const;

  DrainParams params_;
  std::vector<Cluster> clusters_;  // index = event_id - 1
  std::vector<Node> nodes_;        // nodes_[0] is the root
  std::map<std::size_t, std::size_t> length_nodes_;
};

/// Parses a raw log end to end.
std::vector<LogRecord> parse_file(const std::filesystem::path& path, const FormatProfile& profile,
                                  TemplateCatalog& catalog, LoadReport* report = nullptr);

/// TSV columns: line_no, label(0/1), event_id, session_key.
void write_parsed_tsv(const std::filesystem::path& path, std::span<const LogRecord> records,
                      const std::string& config_hash);
std::vector<LogRecord> read_parsed_tsv(const std::filesystem::path& path);

}  // namespace logsd::corpus
