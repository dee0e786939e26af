#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

#include "seqmod/errors.hpp"

#ifndef SEQMOD_VERSION
#define SEQMOD_VERSION "0.0.0"
#endif

namespace seqmod::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                               EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error("sha256 init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0)
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);

  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

std::string timestamp() {
  std::time_t t;
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
    t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Manifest::Manifest(fs::path dir)
    : dir_(fs::weakly_canonical(dir)), path_(dir_ / "manifest.json") {
  std::ifstream in(path_);
  if (in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    text_ = ss.str();
  }
}

std::string Manifest::key_for(const fs::path& p) const {
  const auto abs = fs::weakly_canonical(p);
  const auto rel = abs.lexically_relative(dir_);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return abs.generic_string();
}

void Manifest::check_inputs(const std::vector<fs::path>& inputs) const {
  if (text_.empty()) return;
  json doc;
  try {
    doc = json::parse(text_);
  } catch (const json::exception& e) {
    throw FormatError(path_.string() + ": " + e.what());
  }
  if (!doc.contains("stages")) return;
  for (const auto& in : inputs) {
    const auto key = key_for(in);
    for (const auto& [stage, entry] : doc["stages"].items()) {
      const auto& outs = entry.at("outputs");
      if (!outs.contains(key)) continue;
      if (!fs::exists(in))
        throw StaleInputError(key + " was written by '" + stage +
                              "' but is missing; rerun '" + stage + "'");
      if (outs[key].get<std::string>() != file_digest(in))
        throw StaleInputError(key + " changed since '" + stage +
                              "' wrote it; rerun '" + stage + "'");
    }
  }
}

void Manifest::record(const StageRecord& rec) {
  json doc;
  if (!text_.empty()) {
    try {
      doc = json::parse(text_);
    } catch (const json::exception& e) {
      throw FormatError(path_.string() + ": " + e.what());
    }
  }
  doc["tool"] = "seqmod";
  doc["version"] = SEQMOD_VERSION;
  json entry;
  entry["created"] = timestamp();
  entry["seed"] = rec.seed;
  entry["config"] = rec.config_text;
  json ins = json::object();
  for (const auto& p : rec.inputs) ins[key_for(p)] = file_digest(p);
  entry["inputs"] = std::move(ins);
  json outs = json::object();
  for (const auto& p : rec.outputs) outs[key_for(p)] = file_digest(p);
  entry["outputs"] = std::move(outs);
  doc["stages"][rec.stage] = std::move(entry);

  text_ = doc.dump(2) + "\n";
  std::ofstream out(path_, std::ios::trunc | std::ios::binary);
  if (!out) throw FormatError("cannot write " + path_.string());
  out << text_;
}

}  // namespace seqmod::cli
