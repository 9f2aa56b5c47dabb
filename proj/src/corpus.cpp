#include "logsd/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "logsd/config.hpp"

namespace logsd::corpus {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_hex(char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

bool has_digit(std::string_view s) { return std::any_of(s.begin(), s.end(), is_digit); }

// [-+]?\d+(\.\d+)?
bool is_decimal(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
  const std::size_t int_start = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == int_start) return false;
  if (i < s.size() && s[i] == '.') {
    const std::size_t frac_start = ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i == frac_start) return false;
  }
  return i == s.size();
}

// 0x[0-9a-fA-F]+ or [0-9a-fA-F]{8,} with at least one digit
bool is_hex_token(std::string_view s) {
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    return std::all_of(s.begin() + 2, s.end(), is_hex);
  }
  return s.size() >= 8 && std::all_of(s.begin(), s.end(), is_hex) && has_digit(s);
}

// blk_-?\d+
bool is_block_id(std::string_view s) {
  if (!s.starts_with("blk_")) return false;
  s.remove_prefix(4);
  if (!s.empty() && s[0] == '-') s.remove_prefix(1);
  return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

// /?\d{1,3}(\.\d{1,3}){3}(:\d+)?
bool is_ipv4(std::string_view s) {
  if (!s.empty() && s[0] == '/') s.remove_prefix(1);
  std::size_t i = 0;
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (i >= s.size() || s[i] != '.') return false;
      ++i;
    }
    const std::size_t start = i;
    while (i < s.size() && is_digit(s[i]) && i - start < 3) ++i;
    if (i == start) return false;
  }
  if (i < s.size() && s[i] == ':') {
    const std::size_t start = ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i == start) return false;
  }
  return i == s.size();
}

// Absolute path with at least one character after the leading slash.
bool is_path(std::string_view s) { return s.size() > 1 && s[0] == '/' && s[1] != '/'; }

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> premask(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(is_variable_token(t) ? std::string(kWildcard) : t);
  return out;
}

}  // namespace

bool is_variable_token(std::string_view token) {
  return token == kWildcard || is_block_id(token) || is_ipv4(token) || is_decimal(token) ||
         is_hex_token(token) || is_path(token);
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

double token_similarity(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// Format profiles and raw line loading

FormatProfile FormatProfile::bgl() { return FormatProfile{}; }

FormatProfile FormatProfile::hdfs(std::filesystem::path labels) {
  FormatProfile p;
  p.label_rule = LabelRule::kSessionFile;
  p.content_start = 5;
  p.session_regex = "blk_-?\\d+";
  p.session_labels = std::move(labels);
  return p;
}

FormatProfile FormatProfile::from_config(const RunConfig& cfg) {
  FormatProfile p;
  const auto& rule = cfg.get("label_rule");
  if (rule == "dash_normal") {
    p.label_rule = LabelRule::kDashNormal;
  } else if (rule == "session_file") {
    p.label_rule = LabelRule::kSessionFile;
  } else if (rule == "none") {
    p.label_rule = LabelRule::kNone;
  } else {
    throw ConfigError("label_rule must be dash_normal, session_file or none; got '" + rule + "'");
  }
  const auto start = cfg.get_int("content_start");
  if (start < 0) throw ConfigError("content_start must be >= 0");
  p.content_start = static_cast<std::size_t>(start);
  p.session_regex = cfg.get("session_regex");
  p.session_labels = cfg.path("session_labels");
  if (p.label_rule == LabelRule::kSessionFile && p.session_regex.empty()) {
    throw ConfigError("label_rule=session_file requires session_regex");
  }
  return p;
}

SessionLabels load_session_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (path.empty() || !in) throw DataError("session label file missing: " + path.string());
  SessionLabels labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    const auto key = line.substr(0, comma);
    const auto value = line.substr(comma + 1);
    if (value == "Anomaly" || value == "1") {
      labels[key] = Label::kAnomalous;
    } else if (value == "Normal" || value == "0") {
      labels[key] = Label::kNormal;
    }
    // Anything else is a header row.
  }
  return labels;
}

LineReader::LineReader(const std::filesystem::path& path, FormatProfile profile)
    : in_(path), profile_(std::move(profile)) {
  if (!in_ || std::filesystem::is_directory(path)) {
    throw DataError("cannot read log file " + path.string());
  }
  if (!profile_.session_regex.empty()) {
    try {
      session_re_.emplace(profile_.session_regex);
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid session_regex '" + profile_.session_regex + "': " + e.what());
    }
  }
  if (profile_.label_rule == LabelRule::kSessionFile) {
    session_labels_ = load_session_labels(profile_.session_labels);
  }
}

std::optional<RawLine> LineReader::next() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  RawLine out;
  out.line_no = report_.lines++;

  // Locate the start of field `content_start` and the first field.
  std::size_t i = 0;
  std::size_t field = 0;
  std::string_view first_field;
  std::size_t content_pos = std::string::npos;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (field == 0) first_field = std::string_view(line).substr(start, i - start);
    if (field == profile_.content_start) {
      content_pos = start;
      break;
    }
    ++field;
  }

  if (content_pos == std::string::npos) {
    out.malformed = true;
    out.content = line;
    ++report_.malformed;
  } else {
    out.content = line.substr(content_pos);
  }

  if (session_re_) {
    std::smatch m;
    if (std::regex_search(line, m, *session_re_)) out.session_key = m.str(0);
  }

  if (!out.malformed) {
    switch (profile_.label_rule) {
      case LabelRule::kDashNormal:
        out.label = first_field == "-" ? Label::kNormal : Label::kAnomalous;
        break;
      case LabelRule::kSessionFile: {
        auto it = session_labels_.find(out.session_key);
        out.label = it != session_labels_.end() ? it->second : Label::kNormal;
        break;
      }
      case LabelRule::kNone:
        break;
    }
  }
  return out;
}

std::vector<RawLine> load_raw_lines(const std::filesystem::path& path,
                                    const FormatProfile& profile, LoadReport* report) {
  LineReader reader(path, profile);
  std::vector<RawLine> out;
  while (auto line = reader.next()) out.push_back(std::move(*line));
  if (report) *report = reader.report();
  return out;
}

// ---------------------------------------------------------------------------
// Template catalog

TemplateCatalog::TemplateCatalog(DrainParams params) : params_(params) {
  if (params_.depth < 2) throw ConfigError("parser depth must be >= 2");
  if (!(params_.sim_threshold > 0.0 && params_.sim_threshold < 1.0)) {
    throw ConfigError("parser sim_threshold must lie in (0, 1)");
  }
  if (params_.max_children < 2) throw ConfigError("parser max_children must be >= 2");
  nodes_.emplace_back();
}

std::size_t TemplateCatalog::child_or_create(std::size_t node, const std::string& key) {
  auto it = nodes_[node].children.find(key);
  if (it != nodes_[node].children.end()) return it->second;
  const std::size_t idx = nodes_.size();
  nodes_.emplace_back();
  nodes_[node].children.emplace(key, idx);
  return idx;
}

std::size_t TemplateCatalog::route(const std::vector<std::string>& tokens) {
  const std::string wildcard(kWildcard);
  auto len_it = length_nodes_.find(tokens.size());
  std::size_t node;
  if (len_it == length_nodes_.end()) {
    node = nodes_.size();
    nodes_.emplace_back();
    length_nodes_.emplace(tokens.size(), node);
  } else {
    node = len_it->second;
  }

  const std::size_t layers = std::min<std::size_t>(params_.depth - 2, tokens.size());
  for (std::size_t i = 0; i < layers; ++i) {
    const auto& tok = tokens[i];
    auto& children = nodes_[node].children;
    if (auto it = children.find(tok); it != children.end()) {
      node = it->second;
      continue;
    }
    if (has_digit(tok) || tok == kWildcard) {
      node = child_or_create(node, wildcard);
      continue;
    }
    const bool has_wild = children.count(wildcard) != 0;
    if (has_wild) {
      node = children.size() < params_.max_children ? child_or_create(node, tok)
                                                     : child_or_create(node, wildcard);
    } else if (children.size() + 1 < params_.max_children) {
      node = child_or_create(node, tok);
    } else {
      node = child_or_create(node, wildcard);
    }
  }
  return node;
}

std::optional<std::size_t> TemplateCatalog::route_const(
    const std::vector<std::string>& tokens) const {
  const std::string wildcard(kWildcard);
  auto len_it = length_nodes_.find(tokens.size());
  if (len_it == length_nodes_.end()) return std::nullopt;
  std::size_t node = len_it->second;
  const std::size_t layers = std::min<std::size_t>(params_.depth - 2, tokens.size());
  for (std::size_t i = 0; i < layers; ++i) {
    const auto& children = nodes_[node].children;
    auto it = children.find(tokens[i]);
    if (it == children.end()) it = children.find(wildcard);
    if (it == children.end()) return std::nullopt;
    node = it->second;
  }
  return node;
}

int TemplateCatalog::best_cluster(const Node& leaf, const std::vector<std::string>& tokens,
                                  double* sim) const {
  int best = 0;
  double best_sim = -1.0;
  for (int id : leaf.clusters) {
    const double s = token_similarity(clusters_[id - 1].tokens, tokens);
    if (s > best_sim) {
      best_sim = s;
      best = id;
    }
  }
  *sim = best_sim;
  return best;
}

ParseResult TemplateCatalog::make_result(int id, const std::vector<std::string>& original) const {
  const auto& cluster = clusters_[id - 1];
  ParseResult r;
  r.event_id = id;
  r.template_text = cluster.text;
  for (std::size_t i = 0; i < cluster.tokens.size() && i < original.size(); ++i) {
    if (cluster.tokens[i] == kWildcard) r.params.push_back(original[i]);
  }
  return r;
}

ParseResult TemplateCatalog::parse(std::string_view content) {
  const auto original = split_whitespace(content);
  if (original.empty()) throw DataError("cannot parse an empty log message");
  const auto tokens = premask(original);

  const std::size_t leaf = route(tokens);
  double sim = 0.0;
  int id = best_cluster(nodes_[leaf], tokens, &sim);
  if (id != 0 && sim >= params_.sim_threshold) {
    auto& cluster = clusters_[id - 1];
    bool changed = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (cluster.tokens[i] != tokens[i] && cluster.tokens[i] != kWildcard) {
        cluster.tokens[i] = std::string(kWildcard);
        changed = true;
      }
    }
    if (changed) cluster.text = join(cluster.tokens);
  } else {
    clusters_.push_back(Cluster{tokens, join(tokens)});
    id = static_cast<int>(clusters_.size());
    nodes_[leaf].clusters.push_back(id);
  }
  return make_result(id, original);
}

std::optional<ParseResult> TemplateCatalog::match(std::string_view content) const {
  const auto original = split_whitespace(content);
  if (original.empty()) return std::nullopt;
  const auto tokens = premask(original);
  const auto leaf = route_const(tokens);
  if (!leaf) return std::nullopt;
  double sim = 0.0;
  const int id = best_cluster(nodes_[*leaf], tokens, &sim);
  if (id == 0 || sim < params_.sim_threshold) return std::nullopt;
  return make_result(id, original);
}

int TemplateCatalog::add_template(std::string_view template_text) {
  auto tokens = split_whitespace(template_text);
  if (tokens.empty()) throw DataError("template text must not be empty");
  const std::size_t leaf = route(tokens);
  clusters_.push_back(Cluster{tokens, join(tokens)});
  const int id = static_cast<int>(clusters_.size());
  nodes_[leaf].clusters.push_back(id);
  return id;
}

const std::string& TemplateCatalog::template_text(int event_id) const {
  if (event_id < 1 || static_cast<std::size_t>(event_id) > clusters_.size()) {
    throw DataError("unknown event id " + std::to_string(event_id));
  }
  return clusters_[event_id - 1].text;
}

void TemplateCatalog::save(const std::filesystem::path& path,
                           const std::string& config_hash) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write catalog " + path.string());
  out << "# logsd-catalog v1 depth=" << params_.depth
      << " sim_threshold=" << format_double(params_.sim_threshold)
      << " max_children=" << params_.max_children << " templates=" << clusters_.size();
  if (!config_hash.empty()) out << " config_hash=" << config_hash;
  out << "\n";
  for (std::size_t i = 0; i < clusters_.size(); ++i) {
    out << (i + 1) << '\t' << clusters_[i].text << '\n';
  }
  if (!out) throw DataError("write failed for catalog " + path.string());
}

TemplateCatalog TemplateCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read catalog " + path.string());
  std::string header;
  if (!std::getline(in, header) || !header.starts_with("# logsd-catalog v1")) {
    throw DataError("catalog " + path.string() + " has no v1 header");
  }
  DrainParams params;
  std::istringstream hs(header.substr(std::string("# logsd-catalog v1").size()));
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const auto key = kv.substr(0, eq);
    const auto value = kv.substr(eq + 1);
    try {
      if (key == "depth") params.depth = std::stoi(value);
      if (key == "sim_threshold") params.sim_threshold = std::stod(value);
      if (key == "max_children") params.max_children = std::stoul(value);
    } catch (const std::exception&) {
      throw DataError("catalog header field '" + kv + "' is malformed");
    }
  }
  TemplateCatalog catalog(params);
  std::string line;
  int expected = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("catalog line without TAB: " + line);
    int id = 0;
    try {
      id = std::stoi(line.substr(0, tab));
    } catch (const std::exception&) {
      throw DataError("catalog line with bad id: " + line);
    }
    if (id != expected) {
      throw DataError("catalog ids must be dense and ordered; expected " +
                      std::to_string(expected) + ", found " + std::to_string(id));
    }
    catalog.add_template(line.substr(tab + 1));
    ++expected;
  }
  return catalog;
}

std::vector<LogRecord> parse_file(const std::filesystem::path& path, const FormatProfile& profile,
                                  TemplateCatalog& catalog, LoadReport* report) {
  LineReader reader(path, profile);
  std::vector<LogRecord> records;
  while (auto raw = reader.next()) {
    if (split_whitespace(raw->content).empty()) {
      // Blank lines carry no message; they still advance line numbering.
      continue;
    }
    auto parsed = catalog.parse(raw->content);
    LogRecord rec;
    rec.line_no = raw->line_no;
    rec.label = raw->label;
    rec.event_id = parsed.event_id;
    rec.template_text = std::move(parsed.template_text);
    rec.params = std::move(parsed.params);
    rec.session_key = std::move(raw->session_key);
    records.push_back(std::move(rec));
  }
  if (report) *report = reader.report();
  return records;
}

void write_parsed_tsv(const std::filesystem::path& path, std::span<const LogRecord> records,
                      const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "# logsd-parsed v1 config_hash=" << config_hash << "\n";
  out << "# line_no\tlabel\tevent_id\tsession_key\n";
  for (const auto& r : records) {
    out << r.line_no << '\t' << label_to_int(r.label) << '\t' << r.event_id << '\t'
        << r.session_key << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<LogRecord> read_parsed_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read parsed log " + path.string());
  std::vector<LogRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() < 3) throw DataError("parsed log row has fewer than 3 columns: " + line);
    LogRecord r;
    try {
      r.line_no = std::stoull(cols[0]);
      r.label = label_from_int(std::stoi(cols[1]));
      r.event_id = std::stoi(cols[2]);
    } catch (const std::exception&) {
      throw DataError("malformed parsed log row: " + line);
    }
    if (cols.size() > 3) r.session_key = cols[3];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace logsd::corpus
