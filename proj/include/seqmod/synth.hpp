#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "seqmod/dataio.hpp"

namespace seqmod {

/// Contiguous stretch of the traverse with its own appearance statistics.
struct SynthRegion {
  std::size_t start = 0;
  std::size_t end = 0;         // exclusive
  double drift_scale = 1.0;    // innovation scale of the appearance walk
  double aliasing_level = 0.0; // 0 = distinctive, 1 = every frame identical

  friend bool operator==(const SynthRegion&, const SynthRegion&) = default;
};

/// Parameters of a synthetic reference/query traverse pair.
///
/// Reference frames: the first `informative_features` columns follow an
/// AR(1) walk w (coefficient `smoothness`, innovation `drift_scale` of the
/// current region) blended toward a region-constant vector c, the walk state
/// at the region's first frame:
///   x = (1 - aliasing) * w + aliasing * c.
/// The remaining place columns are an unaliased walk with innovation
/// `filler_scale`, so their variation does not follow difficulty. Every
/// reference value gets independent jitter of `ref_jitter_std`.
/// Queries copy the references, add white noise (`query_noise_std`) and one
/// traverse-wide condition shift vector (`condition_shift_std`).
/// `noise_features` extra columns are drawn independently for references
/// and queries and carry no information at all.
struct SynthSpec {
  std::size_t num_refs = 0;
  std::size_t feature_dim = 0;  // place columns, excluding noise_features
  std::vector<SynthRegion> regions;
  double query_noise_std = 0.5;
  double condition_shift_std = 0.0;
  std::size_t informative_features = 0;
  double smoothness = 0.9;
  double filler_scale = 0.1;
  double ref_jitter_std = 0.01;
  std::size_t noise_features = 0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  std::size_t total_features() const { return feature_dim + noise_features; }
  /// Throws ArgumentError on bad region tiling or negative scales.
  void validate() const;

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

struct SynthData {
  FeatureMatrix refs;
  FeatureMatrix queries;
  GroundTruth gt;  // query i -> reference i
};

SynthData generate(const SynthSpec& spec);

/// The bundled benchmark: sixteen 240-360 frame segments zig-zagging through
/// aliasing levels 0, 0.5 and 0.9, so every contiguous split sees all three
/// levels.
SynthSpec benchmark_spec(std::uint64_t seed, std::size_t noise_features = 0);

std::string to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const std::string& text);

}  // namespace seqmod
