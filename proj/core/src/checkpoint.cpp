#include "jdatt/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

using nlohmann::json;

namespace jdatt {

namespace {
constexpr char kMagic[8] = {'J', 'D', 'A', 'T', 'T', 'C', 'K', '1'};
constexpr int kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json header;
  header["format"] = "jdatt-checkpoint";
  header["version"] = kVersion;
  header["meta"] = ckpt.meta_json.empty() ? json::object() : json::parse(ckpt.meta_json);
  json tensors = json::array();
  for (const auto& [name, t] : ckpt.tensors) tensors.push_back(json{{"name", name}, {"shape", t.shape()}});
  header["tensors"] = tensors;
  const std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof(kMagic));
  const uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& [name, t] : ckpt.tensors)
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a jdatt checkpoint: " + path);
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("truncated checkpoint header: " + path);

  const json header = json::parse(htext);
  if (header.at("version").get<int>() != kVersion)
    throw std::runtime_error("unsupported checkpoint version in " + path);

  Checkpoint ckpt;
  ckpt.meta_json = header.at("meta").dump();
  for (const auto& rec : header.at("tensors")) {
    const std::string name = rec.at("name").get<std::string>();
    const std::vector<int> shape = rec.at("shape").get<std::vector<int>>();
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint data: " + path);
    ckpt.tensors.emplace_back(name, std::move(t));
  }
  return ckpt;
}

uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for digest: " + path);
  uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
    if (in.eof()) break;
  }
  return hash;
}

}  // namespace jdatt
