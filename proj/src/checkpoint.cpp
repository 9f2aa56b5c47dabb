#include "logsd/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace logsd::checkpoint {
namespace {

constexpr const char* kMagic = "LOGSD-CKPT 1";
static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw DataError("checkpoint truncated while reading " + what);
  }
  return v;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

const std::string& require(const Metadata& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw DataError("checkpoint header lacks '" + key + "'");
  return it->second;
}

}  // namespace

void write_raw(const std::filesystem::path& path, const Metadata& meta,
               const nn::ParamSet& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << kMagic << '\n';
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw std::invalid_argument("checkpoint metadata key/value not representable: " + k);
    }
    out << k << '=' << v << '\n';
  }
  out << '\n';
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.count()));
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.ptr()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw DataError("write failed for checkpoint " + path.string());
}

void read_raw(const std::filesystem::path& path, Metadata& meta, nn::ParamSet& tensors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw DataError(path.string() + " is not a logsd checkpoint");
  }
  while (true) {
    if (!std::getline(in, line)) throw DataError("checkpoint header not terminated");
    if (line.empty()) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("bad checkpoint header line: " + line);
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto count = get<std::uint32_t>(in, "tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, "name length");
    if (name_len > 4096) throw DataError("checkpoint tensor name too long");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw DataError("checkpoint truncated in tensor name");
    const auto rank = get<std::uint32_t>(in, name + " rank");
    if (rank > 8) throw DataError("checkpoint tensor " + name + " has rank " + std::to_string(rank));
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(get<std::uint64_t>(in, name + " shape"));
      if (d != 0 && total > (std::size_t{1} << 40) / d) {
        throw DataError("checkpoint tensor " + name + " too large");
      }
      total *= d;
    }
    nn::Tensor t(shape);
    if (!in.read(reinterpret_cast<char*>(t.ptr()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)))) {
      throw DataError("checkpoint truncated in tensor " + name);
    }
    tensors.add(name, std::move(t));
  }
}

void save(const std::filesystem::path& path, const model::Model& model,
          const std::vector<double>& center, const masking::FrequencyTable& frequencies,
          const embedder::EmbeddingTable& embeddings, const masking::MaskConfig& mask_config,
          std::size_t max_seq_len, const Metadata& extra) {
  const auto& mc = model.config();
  Metadata meta = extra;
  meta["variant"] = mc.variant.code();
  meta["dim"] = std::to_string(mc.dim);
  meta["hidden"] = std::to_string(mc.hidden);
  std::string kernels;
  for (std::size_t i = 0; i < mc.kernels.size(); ++i) {
    if (i) kernels += ',';
    kernels += std::to_string(mc.kernels[i]);
  }
  meta["kernels"] = kernels;
  meta["alpha"] = format_double(mc.alpha);
  meta["kappa_set"] = join_doubles(mask_config.kappa_set);
  meta["kappa_mode"] = mask_config.kappa_mode == masking::KappaMode::kFixed ? "fixed" : "sampled";
  meta["kappa_fixed"] = format_double(mask_config.kappa_fixed);
  meta["mask_seed"] = std::to_string(mask_config.seed);
  meta["max_seq_len"] = std::to_string(max_seq_len);
  meta["embedding_seed"] = std::to_string(embeddings.token_seed());
  meta["embedding_source"] =
      embeddings.source() == embedder::Source::kHashed ? "hashed" : "external";

  nn::ParamSet tensors;
  for (const auto& [name, t] : model.params()) tensors.add(name, t);
  nn::Tensor c({center.size()});
  std::copy(center.begin(), center.end(), c.ptr());
  tensors.add("center", std::move(c));

  const auto& counts = frequencies.counts();
  nn::Tensor freq({counts.size(), 2});
  std::size_t row = 0;
  for (const auto& [id, n] : counts) {
    freq.at(row, 0) = id;
    freq.at(row, 1) = static_cast<double>(n);
    ++row;
  }
  tensors.add("frequencies", std::move(freq));

  std::vector<int> ids;
  for (int id = 1; id <= embeddings.max_id(); ++id) {
    if (embeddings.contains(id)) ids.push_back(id);
  }
  nn::Tensor id_t({ids.size()});
  nn::Tensor vec_t({ids.size(), embeddings.dim()});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    id_t[i] = ids[i];
    const auto v = embeddings.vector(ids[i]);
    std::copy(v.begin(), v.end(), vec_t.ptr() + i * embeddings.dim());
  }
  tensors.add("embed_ids", std::move(id_t));
  tensors.add("embed_vectors", std::move(vec_t));
  write_raw(path, meta, tensors);
}

namespace {

Bundle load_unchecked(const std::filesystem::path& path) {
  Metadata meta;
  nn::ParamSet tensors;
  read_raw(path, meta, tensors);

  model::ModelConfig mc;
  mc.variant = model::Variant::parse(require(meta, "variant"));
  mc.dim = std::stoul(require(meta, "dim"));
  mc.hidden = std::stoul(require(meta, "hidden"));
  mc.kernels.clear();
  for (double k : split_doubles(require(meta, "kernels"))) mc.kernels.push_back(static_cast<int>(k));
  mc.alpha = std::stod(require(meta, "alpha"));

  masking::MaskConfig mask;
  mask.scheme = mc.variant.masking;
  mask.kappa_set = split_doubles(require(meta, "kappa_set"));
  mask.kappa_mode = require(meta, "kappa_mode") == "fixed" ? masking::KappaMode::kFixed
                                                          : masking::KappaMode::kSampled;
  mask.kappa_fixed = std::stod(require(meta, "kappa_fixed"));
  mask.seed = std::stoull(require(meta, "mask_seed"));

  for (const char* needed : {"center", "frequencies", "embed_ids", "embed_vectors"}) {
    if (!tensors.contains(needed)) throw DataError(std::string("checkpoint lacks tensor ") + needed);
  }
  nn::ParamSet params;
  for (const auto& [name, t] : tensors) {
    if (name.rfind("ae.", 0) == 0 || name.rfind("eo.", 0) == 0) params.add(name, t);
  }

  const auto& c = tensors.get("center");
  std::vector<double> center(c.data().begin(), c.data().end());

  masking::Counts counts;
  const auto& freq = tensors.get("frequencies");
  if (freq.rank() != 2 || freq.dim(1) != 2) throw DataError("checkpoint frequencies malformed");
  for (std::size_t i = 0; i < freq.dim(0); ++i) {
    counts[static_cast<int>(freq.at(i, 0))] = static_cast<std::size_t>(freq.at(i, 1));
  }

  const auto source = meta.count("embedding_source") && meta.at("embedding_source") == "external"
                          ? embedder::Source::kExternalFile
                          : embedder::Source::kHashed;
  embedder::EmbeddingTable table(mc.dim, std::stoull(require(meta, "embedding_seed")), source);
  const auto& ids = tensors.get("embed_ids");
  const auto& vecs = tensors.get("embed_vectors");
  if (vecs.rank() != 2 || vecs.dim(0) != ids.size() || vecs.dim(1) != mc.dim) {
    throw DataError("checkpoint embedding table malformed");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    table.set(static_cast<int>(ids[i]),
              std::span<const double>(vecs.ptr() + i * mc.dim, mc.dim));
  }

  const std::size_t l_max = std::stoul(require(meta, "max_seq_len"));
  model::Model model(mc, std::move(params));
  if (center.size() != mc.rep_dim()) throw DataError("checkpoint center has wrong dimension");
  return Bundle{std::move(model), std::move(center), masking::FrequencyTable(std::move(counts)),
                std::move(table), std::move(mask), l_max, std::move(meta)};
}

}  // namespace

Bundle load(const std::filesystem::path& path) {
  // Number parsing and model validation failures mean a corrupt file.
  try {
    return load_unchecked(path);
  } catch (const std::logic_error& e) {
    throw DataError("checkpoint " + path.string() + " is malformed: " + e.what());
  } catch (const ConfigError& e) {
    throw DataError("checkpoint " + path.string() + " is malformed: " + e.what());
  }
}

}  // namespace logsd::checkpoint
