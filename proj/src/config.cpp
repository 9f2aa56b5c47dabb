#include "logsd/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "logsd/common.hpp"

namespace logsd {
namespace {

struct KeySpec {
  const char* key;
  const char* default_value;
  bool is_path;
  const char* default_file;  // for path keys resolved under out_dir
};

// clang-format off
const KeySpec kKeys[] = {
    {"seed", "42", false, nullptr},
    {"simd", "auto", false, nullptr},
    // corpus
    {"profile", "bgl", false, nullptr},
    {"label_rule", "dash_normal", false, nullptr},
    {"content_start", "9", false, nullptr},
    {"session_regex", "", false, nullptr},
    {"parser_depth", "4", false, nullptr},
    {"parser_sim_threshold", "0.4", false, nullptr},
    {"parser_max_children", "100", false, nullptr},
    // sequencer
    {"grouping", "entry", false, nullptr},
    {"window_size", "100", false, nullptr},
    {"dedup", "true", false, nullptr},
    {"split_strategy", "chronological", false, nullptr},
    {"train_ratio", "0.8", false, nullptr},
    {"max_seq_len", "256", false, nullptr},
    // embedder
    {"embedding_dim", "32", false, nullptr},
    {"embedding_seed", "1234", false, nullptr},
    // masking
    {"kappa_set", "0.05,0.1,0.15,0.2,0.3", false, nullptr},
    {"kappa_mode", "sampled", false, nullptr},
    {"kappa_fixed", "0.1", false, nullptr},
    // model
    {"variant", "dff", false, nullptr},
    {"alpha", "50", false, nullptr},
    {"hidden", "128", false, nullptr},
    {"kernels", "3,4,5", false, nullptr},
    // trainer
    {"lr_start", "0.01", false, nullptr},
    {"lr_end", "0.0001", false, nullptr},
    {"decay_power", "1", false, nullptr},
    {"weight_decay", "0.0001", false, nullptr},
    {"batch_size", "64", false, nullptr},
    {"max_epochs", "100", false, nullptr},
    {"patience", "20", false, nullptr},
    {"min_rel_improvement", "0.0001", false, nullptr},
    // synthbench
    {"synth_n_train", "2000", false, nullptr},
    {"synth_n_test_normal", "400", false, nullptr},
    {"synth_n_test_anom", "100", false, nullptr},
    {"synth_vocab_rare", "40", false, nullptr},
    {"synth_dominant_events", "1", false, nullptr},
    {"synth_unseen_events", "5", false, nullptr},
    {"synth_seq_len", "8", false, nullptr},
    {"synth_dominant_fill_prob", "0.9", false, nullptr},
    {"synth_diverse_fraction", "0.2", false, nullptr},
    {"synth_diverse_patterns", "8", false, nullptr},
    {"synth_test_diverse_fraction", "0.5", false, nullptr},
    {"synth_seed", "7", false, nullptr},
    {"ablation_variants", "sng,srl,sfl,srf,sff,dng,drl,dfl,drf,dff", false, nullptr},
    // paths
    {"input", "", true, nullptr},
    {"out_dir", ".", true, nullptr},
    {"session_labels", "", true, nullptr},
    {"embedding_file", "", true, nullptr},
    {"catalog", "", true, "catalog.txt"},
    {"parsed", "", true, "parsed.tsv"},
    {"train_set", "", true, "train.tsv"},
    {"test_set", "", true, "test.tsv"},
    {"checkpoint", "", true, "model.ckpt"},
    {"loss_log", "", true, "loss_log.csv"},
    {"scores", "", true, "scores.csv"},
    {"report", "", true, "report.csv"},
    {"metrics", "", true, "metrics.txt"},
    {"ablation_report", "", true, "ablation.csv"},
};
// clang-format on

const KeySpec* find_key(const std::string& key) {
  for (const auto& k : kKeys) {
    if (key == k.key) return &k;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : kKeys) values_[k.key] = k.default_value;
  apply_profile();
}

bool RunConfig::is_known_key(const std::string& key) { return find_key(key) != nullptr; }

bool RunConfig::is_path_key(const std::string& key) {
  const auto* k = find_key(key);
  return k != nullptr && k->is_path;
}

RunConfig RunConfig::from_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (!is_known_key(key)) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown config key '" + key +
                        "'");
    }
    cfg.set(key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
  explicit_.insert(key);
  if (key == "profile") apply_profile();
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::apply_profile() {
  const auto& profile = values_.at("profile");
  std::map<std::string, std::string> preset;
  if (profile == "bgl") {
    preset = {{"label_rule", "dash_normal"}, {"content_start", "9"},
              {"session_regex", ""},         {"grouping", "entry"},
              {"dedup", "true"},             {"split_strategy", "chronological"}};
  } else if (profile == "hdfs") {
    preset = {{"label_rule", "session_file"}, {"content_start", "5"},
              {"session_regex", "blk_-?\\d+"}, {"grouping", "session"},
              {"dedup", "false"},              {"split_strategy", "random"}};
  } else if (profile != "custom") {
    throw ConfigError("unknown profile '" + profile + "' (expected bgl, hdfs or custom)");
  }
  for (const auto& [k, v] : preset) {
    if (!is_set(k)) values_[k] = v;
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const auto& s = get(key);
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + s + "'");
  }
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  const auto& s = get(key);
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + s + "'");
  }
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + s + "'");
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) {
    double v = 0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw ConfigError("config key '" + key + "' has a non-numeric entry '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split_list(get(key))) {
    int v = 0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw ConfigError("config key '" + key + "' has a non-integer entry '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::filesystem::path RunConfig::path(const std::string& key) const {
  const auto* spec = find_key(key);
  if (spec == nullptr || !spec->is_path) throw ConfigError("'" + key + "' is not a path key");
  const auto& v = get(key);
  if (!v.empty()) return v;
  if (spec->default_file == nullptr) return {};
  return std::filesystem::path(get("out_dir")) / spec->default_file;
}

std::string RunConfig::canonical_text(bool include_paths) const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (include_paths || !is_path_key(k)) out += k + " = " + v + "\n";
  }
  return out;
}

std::uint64_t RunConfig::hash() const {
  std::string text;
  for (const auto& [k, v] : values_) {
    if (is_path_key(k)) continue;
    text += k + "=" + v + "\n";
  }
  return fnv1a64(text);
}

std::string RunConfig::hash_hex() const { return hex64(hash()); }

}  // namespace logsd
