#include "seqmod/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "seqmod/errors.hpp"

namespace seqmod {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError("config key '" + std::string(key) +
                          "': expected a non-negative integer, got '" +
                          std::string(v) + "'");
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError("config key '" + std::string(key) +
                          "': expected a number, got '" + std::string(v) + "'");
  return out;
}

std::string fmt_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

std::string_view to_string(Metric m) {
  return m == Metric::kCosine ? "cosine" : "negative-euclidean";
}

Metric parse_metric(std::string_view s) {
  if (s == "cosine") return Metric::kCosine;
  if (s == "negative-euclidean" || s == "euclidean")
    return Metric::kNegativeEuclidean;
  throw ValidationError("unknown metric '" + std::string(s) + "'");
}

std::vector<std::size_t> parse_lengths(std::string_view s) {
  std::vector<std::size_t> out;
  for (const auto& f : detail::split_fields(s))
    if (!f.empty()) out.push_back(to_size("lengths", f));
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "m",           "step",          "fractions",    "tolerance_frames",
      "seed",        "metric",        "lengths",      "target_recall",
      "alpha",       "bins",          "hidden_layers", "hidden_width",
      "beta",        "gamma",         "batch_size",   "learning_rate",
      "max_epochs",  "patience"};
  return keys;
}

void set_config_value(PipelineConfig& c, std::string_view key,
                      std::string_view value) {
  const std::string v = trim(value);
  if (key == "m") c.m = to_size(key, v);
  else if (key == "step") c.step = to_size(key, v);
  else if (key == "tolerance_frames") c.tolerance_frames = to_size(key, v);
  else if (key == "seed") c.seed = to_size(key, v);
  else if (key == "metric") c.metric = parse_metric(v);
  else if (key == "lengths") c.lengths = parse_lengths(v);
  else if (key == "target_recall") c.target_recall = to_real(key, v);
  else if (key == "alpha") c.alpha = to_real(key, v);
  else if (key == "bins") c.bins = to_size(key, v);
  else if (key == "hidden_layers") c.hidden_layers = to_size(key, v);
  else if (key == "hidden_width") c.hidden_width = to_size(key, v);
  else if (key == "beta") c.beta = to_real(key, v);
  else if (key == "gamma") c.gamma = to_real(key, v);
  else if (key == "batch_size") c.batch_size = to_size(key, v);
  else if (key == "learning_rate") c.learning_rate = to_real(key, v);
  else if (key == "max_epochs") c.max_epochs = to_size(key, v);
  else if (key == "patience") c.patience = to_size(key, v);
  else if (key == "fractions") {
    auto f = detail::split_fields(v);
    if (f.size() != 3)
      throw ValidationError("config key 'fractions': expected three values");
    c.fractions = {to_real(key, f[0]), to_real(key, f[1]), to_real(key, f[2])};
  } else {
    throw ValidationError("unknown config key '" + std::string(key) + "'");
  }
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError(msg); };
  if (m < 2) fail("m must be >= 2");
  if (step < 1) fail("step must be >= 1");
  if (lengths.empty() || lengths.front() != 1)
    fail("lengths must start at 1");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] % 2 == 0) fail("lengths must all be odd");
    if (i > 0 && lengths[i] <= lengths[i - 1])
      fail("lengths must be strictly increasing");
  }
  if (!(target_recall > 0.0 && target_recall <= 1.0))
    fail("target_recall must lie in (0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (bins == 1) fail("bins must be >= 2 (or 0 for automatic)");
  if (hidden_layers < 1 || hidden_width < 1)
    fail("hidden_layers and hidden_width must be >= 1");
  if (!(beta > 0.0) || !(gamma > 0.0) || gamma > beta)
    fail("loss slopes must satisfy 0 < gamma <= beta");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  const double total = fractions.train + fractions.valid + fractions.test;
  if (fractions.train <= 0 || fractions.valid <= 0 || fractions.test <= 0 ||
      std::abs(total - 1.0) > 1e-9)
    fail("fractions must be positive and sum to 1");
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> unknown;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected 'key = value'");
    auto key = trim(std::string_view(t).substr(0, eq));
    auto value = trim(std::string_view(t).substr(eq + 1));
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      unknown.push_back(key);
      continue;
    }
    set_config_value(c, key, value);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config key(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw ValidationError(msg);
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const PipelineConfig& c) {
  std::ostringstream o;
  std::string lens;
  for (std::size_t i = 0; i < c.lengths.size(); ++i)
    lens += (i ? "," : "") + std::to_string(c.lengths[i]);
  o << "m = " << c.m << '\n'
    << "step = " << c.step << '\n'
    << "fractions = " << fmt_real(c.fractions.train) << ','
    << fmt_real(c.fractions.valid) << ',' << fmt_real(c.fractions.test) << '\n'
    << "tolerance_frames = " << c.tolerance_frames << '\n'
    << "seed = " << c.seed << '\n'
    << "metric = " << to_string(c.metric) << '\n'
    << "lengths = " << lens << '\n'
    << "target_recall = " << fmt_real(c.target_recall) << '\n'
    << "alpha = " << fmt_real(c.alpha) << '\n'
    << "bins = " << c.bins << '\n'
    << "hidden_layers = " << c.hidden_layers << '\n'
    << "hidden_width = " << c.hidden_width << '\n'
    << "beta = " << fmt_real(c.beta) << '\n'
    << "gamma = " << fmt_real(c.gamma) << '\n'
    << "batch_size = " << c.batch_size << '\n'
    << "learning_rate = " << fmt_real(c.learning_rate) << '\n'
    << "max_epochs = " << c.max_epochs << '\n'
    << "patience = " << c.patience << '\n';
  return o.str();
}

}  // namespace seqmod
