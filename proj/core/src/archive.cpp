#include "covex/archive.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "covex/error.hpp"
#include "json.hpp"

namespace covex {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'O', 'V', 'E', 'X', 'A', 'R', '1'};

static_assert(std::endian::native == std::endian::little,
              "archive payload is written in host order; add byte swapping for big-endian hosts");

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

const ag::Matrix* TensorArchive::find(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return &m;
  }
  return nullptr;
}

const std::string& TensorArchive::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw ModelError("archive is missing metadata key '" + key + "'");
  return it->second;
}

void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  nlohmann::json header;
  header["meta"] = archive.meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, m] : archive.tensors) {
    header["tensors"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write archive " + path.string());
  out.write(kMagic.data(), kMagic.size());
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, m] : archive.tensors) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw ModelError("failed writing archive " + path.string());
}

TensorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open archive " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ModelError(path.string() + " is not a covex archive");
  const std::uint64_t header_len = read_u64(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ModelError(path.string() + ": truncated header");

  TensorArchive archive;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    archive.meta = header.at("meta").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(path.string() + ": bad archive header: " + e.what());
  }
  for (const auto& t : header.at("tensors")) {
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    ag::Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw ModelError(path.string() + ": truncated tensor " + t.at("name").get<std::string>());
    archive.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
  }
  return archive;
}

}  // namespace covex
