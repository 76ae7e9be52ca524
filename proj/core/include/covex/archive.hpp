#ifndef COVEX_ARCHIVE_HPP
#define COVEX_ARCHIVE_HPP

// Named-tensor archive used for checkpoints and converted pretrained weights.
//
// Layout:
//   8 bytes   magic "COVEXAR1"
//   8 bytes   header length N, little-endian uint64
//   N bytes   UTF-8 JSON: {"meta": {string: string}, "tensors": [{"name", "rows", "cols"}]}
//   payload   each tensor in header order, row-major float64 little-endian

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "covex/autograd.hpp"

namespace covex {

struct TensorArchive {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, ag::Matrix>> tensors;

  const ag::Matrix* find(const std::string& name) const;
  const std::string& meta_at(const std::string& key) const;
};

void write_archive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive read_archive(const std::filesystem::path& path);

}  // namespace covex

#endif  // COVEX_ARCHIVE_HPP
