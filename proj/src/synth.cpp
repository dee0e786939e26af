#include "seqmod/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "seqmod/errors.hpp"

namespace seqmod {

namespace {

// Independent stream per component so that, e.g., appending noise columns
// leaves the place columns untouched.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t component) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(component)};
  return std::mt19937_64(seq);
}

enum Stream : std::uint64_t {
  kWalk = 1,
  kFiller,
  kJitter,
  kQueryNoise,
  kShift,
  kNoiseRef,
  kNoiseQuery,
  kLayout
};

}  // namespace

void SynthSpec::validate() const {
  if (num_refs < 2) throw ArgumentError("synthetic traverse needs >= 2 frames");
  if (feature_dim < 1) throw ArgumentError("feature_dim must be >= 1");
  if (informative_features > feature_dim)
    throw ArgumentError("informative_features exceeds feature_dim");
  if (regions.empty()) throw ArgumentError("at least one region is required");
  std::size_t next = 0;
  for (const auto& r : regions) {
    if (r.start != next || r.end <= r.start)
      throw ArgumentError("regions must tile [0, num_refs) in order without "
                          "gaps or overlap (region starting at " +
                          std::to_string(r.start) + ")");
    if (!(r.drift_scale >= 0.0))
      throw ArgumentError("drift_scale must be >= 0");
    if (!(r.aliasing_level >= 0.0 && r.aliasing_level <= 1.0))
      throw ArgumentError("aliasing_level must lie in [0, 1]");
    next = r.end;
  }
  if (next != num_refs)
    throw ArgumentError("regions must end at num_refs");
  if (!(query_noise_std >= 0) || !(condition_shift_std >= 0) ||
      !(filler_scale >= 0) || !(ref_jitter_std >= 0) || !(noise_std >= 0))
    throw ArgumentError("noise and scale parameters must be >= 0");
  if (!(smoothness >= 0.0 && smoothness < 1.0))
    throw ArgumentError("smoothness must lie in [0, 1)");
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n_place = spec.feature_dim;
  const std::size_t k = spec.informative_features;
  const std::size_t n_total = spec.total_features();
  const double rho = spec.smoothness;
  const double stationary = 1.0 / std::sqrt(1.0 - rho * rho);

  auto walk_rng = stream(spec.seed, kWalk);
  auto filler_rng = stream(spec.seed, kFiller);
  auto jitter_rng = stream(spec.seed, kJitter);
  auto qnoise_rng = stream(spec.seed, kQueryNoise);
  auto shift_rng = stream(spec.seed, kShift);
  auto nref_rng = stream(spec.seed, kNoiseRef);
  auto nquery_rng = stream(spec.seed, kNoiseQuery);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> shift(n_place);
  for (auto& x : shift) x = spec.condition_shift_std * normal(shift_rng);

  const double first_drift = spec.regions.front().drift_scale;
  std::vector<double> walk(k), filler(n_place - k);
  for (auto& x : walk) x = first_drift * stationary * normal(walk_rng);
  for (auto& x : filler) x = spec.filler_scale * stationary * normal(filler_rng);

  // Each region's constant vector is the walk state where the region begins,
  // so appearance is continuous across region boundaries.
  std::vector<double> region_const = walk;

  Matrix<float> refs(spec.num_refs, n_total);
  Matrix<float> queries(spec.num_refs, n_total);
  std::size_t region = 0;
  for (std::size_t i = 0; i < spec.num_refs; ++i) {
    const auto& reg = spec.regions[region];
    if (i > 0) {
      for (auto& x : walk) x = rho * x + reg.drift_scale * normal(walk_rng);
      for (auto& x : filler) x = rho * x + spec.filler_scale * normal(filler_rng);
    }
    if (i == reg.start) region_const = walk;
    const double a = reg.aliasing_level;
    for (std::size_t j = 0; j < n_place; ++j) {
      double x = j < k ? (1.0 - a) * walk[j] + a * region_const[j]
                       : filler[j - k];
      x += spec.ref_jitter_std * normal(jitter_rng);
      const double q = x + spec.query_noise_std * normal(qnoise_rng) + shift[j];
      refs(i, j) = static_cast<float>(x);
      queries(i, j) = static_cast<float>(q);
    }
    for (std::size_t j = n_place; j < n_total; ++j) {
      refs(i, j) = static_cast<float>(spec.noise_std * normal(nref_rng));
      queries(i, j) = static_cast<float>(spec.noise_std * normal(nquery_rng));
    }
    if (i + 1 == reg.end && region + 1 < spec.regions.size()) ++region;
  }

  SynthData out{FeatureMatrix(std::move(refs)), FeatureMatrix(std::move(queries)),
                GroundTruth{}};
  out.gt.pairs.reserve(spec.num_refs);
  for (std::size_t i = 0; i < spec.num_refs; ++i) out.gt.pairs.emplace_back(i, i);
  return out;
}

SynthSpec benchmark_spec(std::uint64_t seed, std::size_t noise_features) {
  // Difficulty zig-zags 0 -> 0.5 -> 0.9 -> 0.5 -> 0 ... so neighbouring
  // segments always differ by one level; the phase and segment lengths vary
  // with the seed.
  constexpr std::array<double, 4> kPattern{0.0, 0.5, 0.9, 0.5};
  constexpr std::size_t kSegments = 16;
  constexpr std::size_t kMinSegment = 240;
  constexpr std::size_t kMaxSegment = 360;

  SynthSpec spec;
  spec.feature_dim = 48;
  spec.informative_features = 32;
  spec.query_noise_std = 2.0;
  spec.condition_shift_std = 0.1;
  spec.smoothness = 0.9;
  spec.filler_scale = 0.1;
  spec.ref_jitter_std = 0.01;
  spec.noise_features = noise_features;
  spec.noise_std = 1.0;
  spec.seed = seed;

  auto rng = stream(seed, kLayout);
  std::uniform_int_distribution<std::size_t> phase_dist(0, kPattern.size() - 1);
  std::uniform_int_distribution<std::size_t> len_dist(kMinSegment, kMaxSegment);
  const std::size_t phase = phase_dist(rng);
  std::size_t start = 0;
  for (std::size_t s = 0; s < kSegments; ++s) {
    const std::size_t len = len_dist(rng);
    spec.regions.push_back(
        {start, start + len, 1.0, kPattern[(phase + s) % kPattern.size()]});
    start += len;
  }
  spec.num_refs = start;
  return spec;
}

std::string to_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["num_refs"] = spec.num_refs;
  j["feature_dim"] = spec.feature_dim;
  j["informative_features"] = spec.informative_features;
  j["query_noise_std"] = spec.query_noise_std;
  j["condition_shift_std"] = spec.condition_shift_std;
  j["smoothness"] = spec.smoothness;
  j["filler_scale"] = spec.filler_scale;
  j["ref_jitter_std"] = spec.ref_jitter_std;
  j["noise_features"] = spec.noise_features;
  j["noise_std"] = spec.noise_std;
  j["seed"] = spec.seed;
  auto& regions = j["regions"] = nlohmann::ordered_json::array();
  for (const auto& r : spec.regions)
    regions.push_back({{"start", r.start},
                       {"end", r.end},
                       {"drift_scale", r.drift_scale},
                       {"aliasing_level", r.aliasing_level}});
  return j.dump(2) + "\n";
}

SynthSpec synth_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("synth spec: ") + e.what());
  }
  SynthSpec s;
  try {
    s.num_refs = j.at("num_refs").get<std::size_t>();
    s.feature_dim = j.at("feature_dim").get<std::size_t>();
    s.informative_features = j.at("informative_features").get<std::size_t>();
    s.query_noise_std = j.value("query_noise_std", s.query_noise_std);
    s.condition_shift_std = j.value("condition_shift_std", s.condition_shift_std);
    s.smoothness = j.value("smoothness", s.smoothness);
    s.filler_scale = j.value("filler_scale", s.filler_scale);
    s.ref_jitter_std = j.value("ref_jitter_std", s.ref_jitter_std);
    s.noise_features = j.value("noise_features", s.noise_features);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.seed = j.value("seed", s.seed);
    for (const auto& r : j.at("regions"))
      s.regions.push_back({r.at("start").get<std::size_t>(),
                           r.at("end").get<std::size_t>(),
                           r.value("drift_scale", 1.0),
                           r.value("aliasing_level", 0.0)});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace seqmod
