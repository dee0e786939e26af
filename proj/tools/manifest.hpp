#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace seqmod::cli {

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

/// What one subcommand consumed and produced.
struct StageRecord {
  std::string stage;
  std::string config_text;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
};

/// `manifest.json` of an output directory. One entry per stage, keyed by
/// subcommand name, each listing input and output digests.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path dir);

  const std::filesystem::path& path() const { return path_; }

  /// Throws StaleInputError when an input was written by an earlier stage of
  /// this manifest and its bytes no longer match the recorded digest.
  void check_inputs(const std::vector<std::filesystem::path>& inputs) const;

  /// Replaces the stage's entry and rewrites the file.
  void record(const StageRecord& rec);

 private:
  std::string key_for(const std::filesystem::path& p) const;

  std::filesystem::path dir_;
  std::filesystem::path path_;
  std::string text_;  // current file contents, empty when absent
};

/// ISO-8601 UTC time from SOURCE_DATE_EPOCH when set, else the clock.
std::string timestamp();

}  // namespace seqmod::cli
