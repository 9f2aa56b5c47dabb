#pragma once

// Binary model checkpoint.
//
//   LOGSD-CKPT 1\n
//   key=value\n ...      (metadata, one per line)
//   \n                   (end of header)
//   u32 count, then per tensor: u32 name_len, name, u32 rank, u64 dims[rank],
//   f64 data[prod(dims)]  -- all little-endian

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "logsd/embedder.hpp"
#include "logsd/masking.hpp"
#include "logsd/model.hpp"
#include "logsd/tensor_nn.hpp"

namespace logsd::checkpoint {

using Metadata = std::map<std::string, std::string>;

void write_raw(const std::filesystem::path& path, const Metadata& meta,
               const nn::ParamSet& tensors);
void read_raw(const std::filesystem::path& path, Metadata& meta, nn::ParamSet& tensors);

struct Bundle {
  model::Model model;
  std::vector<double> center;
  masking::FrequencyTable frequencies;
  embedder::EmbeddingTable embeddings;
  masking::MaskConfig mask_config;
  std::size_t max_seq_len = 256;
  Metadata meta;  // everything from the header, including the fields above
};

/// Extra metadata (config hash, epochs, ...) is merged into the header.
void save(const std::filesystem::path& path, const model::Model& model,
          const std::vector<double>& center, const masking::FrequencyTable& frequencies,
          const embedder::EmbeddingTable& embeddings, const masking::MaskConfig& mask_config,
          std::size_t max_seq_len, const Metadata& extra = {});

Bundle load(const std::filesystem::path& path);

}  // namespace logsd::checkpoint
