#include <doctest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "seqmod/benchmark.hpp"
#include "seqmod/errors.hpp"
#include "seqmod/eval.hpp"
#include "support.hpp"

using namespace seqmod;

namespace {

const std::vector<std::size_t> kLengths{1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21};

EvalSet random_set(std::size_t chunks, std::mt19937_64& rng, std::size_t dim = 4) {
  EvalSet s;
  for (std::size_t i = 0; i < chunks; ++i) s.chunk_ids.push_back(100 + 3 * i);
  s.table.lengths = kLengths;
  s.table.recalls = Matrix<double>(chunks, kLengths.size());
  std::uniform_int_distribution<int> hits(0, 8);
  for (auto& r : s.table.recalls.data()) r = hits(rng) / 8.0;  // many exact ties
  s.descriptors = testing::random_matrix(chunks, dim, rng);
  return s;
}

// Model whose output is `value` for every input.
Regressor constant_model(std::size_t dim, double value) {
  RegressorConfig c;
  c.input_dim = dim;
  c.hidden_layers = 2;
  c.hidden_width = 4;
  auto m = make_regressor(c);
  for (auto& l : m.layers) {
    std::fill(l.weights.data().begin(), l.weights.data().end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  m.layers.back().bias[0] = value;
  m.allowed_lengths = kLengths;
  return m;
}

double sects_by_scan(const EvalSet& s, std::size_t col, double target) {
  std::size_t met = 0;
  for (std::size_t c = 0; c < s.table.chunks(); ++c) met += s.table.recalls(c, col) >= target;
  return 100.0 * double(met) / double(s.table.chunks());
}

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.num_refs = 2400;
  s.feature_dim = 48;
  s.informative_features = 32;
  s.query_noise_std = 2.0;
  s.condition_shift_std = 0.1;
  s.seed = seed;
  const double levels[] = {0.0, 0.5, 0.9, 0.5};
  for (std::size_t r = 0; r < 8; ++r) s.regions.push_back({300 * r, 300 * (r + 1), 1.0, levels[(r + seed) % 4]});
  return s;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("sects percentage and median") {
  const auto r = make_report("x", 0.75, {{0, 3, 0.8, false}, {1, 5, 0.5, true}, {2, 7, 0.9, false}});
  CHECK(r.sects_pct == doctest::Approx(200.0 / 3.0).epsilon(1e-15));
  CHECK(format_pct(r.sects_pct) == "66.7");
  CHECK(r.median_length == 5.0);
  CHECK(r.records[0].meets_target);
  CHECK_FALSE(r.records[1].meets_target);  // recomputed, not trusted
  CHECK(make_report("x", 0.8, {{0, 1, 0.8, false}}).sects_pct == 100.0);

  const std::vector<std::size_t> even{9, 3, 7, 5};
  CHECK(median_length(even) == 6.0);
  const std::vector<std::size_t> odd{9, 3, 7};
  CHECK(median_length(odd) == 7.0);
  CHECK_THROWS_AS(median_length(std::vector<std::size_t>{}), ArgumentError);
  CHECK_THROWS_AS(make_report("x", 0.5, {}), ArgumentError);
}

TEST_CASE("fixed strategy reads the column of its length") {
  std::mt19937_64 rng(1);
  const auto s = random_set(30, rng);
  for (std::size_t l = 0; l < kLengths.size(); ++l) {
    const auto r = evaluate_strategy(Strategy::fixed(kLengths[l]), s, 0.75);
    CHECK(r.strategy_id == "fixed:" + std::to_string(kLengths[l]));
    CHECK(r.median_length == double(kLengths[l]));
    CHECK(r.sects_pct == doctest::Approx(sects_by_scan(s, l, 0.75)).epsilon(1e-15));
    for (std::size_t c = 0; c < 30; ++c) {
      CHECK(r.records[c].chunk_id == s.chunk_ids[c]);
      CHECK(r.records[c].recall == s.table.recalls(c, l));
    }
  }
  CHECK_THROWS_AS(evaluate_strategy(Strategy::fixed(4), s, 0.75), ArgumentError);
}

TEST_CASE("a constant predictor behaves like the fixed strategy") {
  std::mt19937_64 rng(2);
  const auto s = random_set(25, rng);
  for (double v : {-3.0, 1.0, 6.2, 13.0, 40.0}) {
    const auto model = constant_model(4, v);
    const auto dyn = evaluate_strategy(Strategy::dynamic(model), s, 0.75);
    const auto fix = evaluate_strategy(Strategy::fixed(quantize_length(v, kLengths)), s, 0.75);
    CHECK(dyn.strategy_id == "dynamic");
    CHECK(dyn.records == fix.records);
    CHECK(dyn.sects_pct == fix.sects_pct);
    CHECK(dyn.median_length == fix.median_length);
  }
}

TEST_CASE("dynamic strategy predicts per chunk from descriptors") {
  std::mt19937_64 rng(3);
  auto s = random_set(12, rng, 1);
  // identity-like model: output equals the single input when it is positive
  RegressorConfig c;
  c.input_dim = 1;
  c.hidden_layers = 1;
  c.hidden_width = 1;
  auto m = make_regressor(c);
  m.layers[0].weights(0, 0) = 1.0;
  m.layers[0].bias[0] = 0.0;
  m.layers[1].weights(0, 0) = 1.0;
  m.layers[1].bias[0] = 0.0;
  m.allowed_lengths = kLengths;
  for (std::size_t i = 0; i < 12; ++i) s.descriptors(i, 0) = 1.5 * double(i);
  const auto r = evaluate_strategy(Strategy::dynamic(m, "mine"), s, 0.75);
  CHECK(r.strategy_id == "mine");
  for (std::size_t i = 0; i < 12; ++i) {
    const auto len = quantize_length(1.5 * double(i), kLengths);
    CHECK(r.records[i].chosen_length == len);
    CHECK(r.records[i].recall == s.table.recalls(i, s.table.column(len)));
  }
}

TEST_CASE("train-split fixed baseline") {
  SweepTable t;
  t.lengths = {1, 3, 5, 7};
  t.recalls = Matrix<double>(4, 4, std::vector<double>{
      0.25, 0.5, 1.0, 1.0,
      0.5, 0.75, 0.5, 1.0,
      0.5, 0.75, 0.75, 0.75,
      0.25, 1.0, 0.75, 0.5});
  // mean recalls 0.375, 0.75, 0.75, 0.8125
  CHECK(baseline_train_fixed(t, 0.75) == 3);
  CHECK(baseline_train_fixed(t, 0.8) == 7);
  CHECK(baseline_train_fixed(t, 0.95) == 7);  // none reach: best mean
  // shares reaching 0.75: 0, 0.75, 0.75, 0.75
  CHECK(baseline_train_fixed(t, 0.75, BaselineRule::kSectsPct) == 3);
  CHECK(baseline_train_fixed(t, 0.8, BaselineRule::kSectsPct) == 7);  // none reach: best share

  SweepTable tie;
  tie.lengths = {1, 3, 5};
  tie.recalls = Matrix<double>(2, 3, std::vector<double>{0.1, 0.5, 0.5, 0.3, 0.5, 0.5});
  CHECK(baseline_train_fixed(tie, 0.9) == 3);  // best-mean ties go to the shorter
  CHECK_THROWS_AS(baseline_train_fixed(SweepTable{{1}, Matrix<double>(0, 1)}, 0.5), ArgumentError);
}

TEST_CASE("nearest allowed length ties go up") {
  const std::vector<std::size_t> a{1, 3, 5};
  CHECK(nearest_length(4.0, a) == 5);
  CHECK(nearest_length(2.0, a) == 3);
  CHECK(nearest_length(2.9, a) == 3);
  CHECK(nearest_length(0.0, a) == 1);
  CHECK(nearest_length(99.0, a) == 5);
  CHECK_THROWS_AS(nearest_length(1.0, std::vector<std::size_t>{}), ArgumentError);
}

TEST_CASE("oracle fixed lengths agree with a linear scan") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_set(1 + rng() % 40, rng);
    std::vector<ChunkRecord> recs;
    std::uniform_int_distribution<std::size_t> pick(0, kLengths.size() - 1);
    for (std::size_t i = 0; i < s.chunk_ids.size(); ++i) {
      const auto l = pick(rng);
      recs.push_back({s.chunk_ids[i], kLengths[l], s.table.recalls(i, l), false});
    }
    const auto ours = make_report("dynamic", 0.75, recs);

    std::size_t want_c = 0;
    double best = 1e9;
    for (std::size_t l = 0; l < kLengths.size(); ++l) {
      const double gap = std::abs(sects_by_scan(s, l, 0.75) - ours.sects_pct);
      if (gap < best - 1e-12) best = gap, want_c = kLengths[l];
    }
    std::size_t want_l = 0;
    best = 1e9;
    for (std::size_t l = 0; l < kLengths.size(); ++l) {
      const double gap = std::abs(double(kLengths[l]) - ours.median_length);
      if (gap <= best) best = gap, want_l = kLengths[l];
    }

    const auto mc = oracle_match_consistency(s, 0.75, ours);
    const auto ml = oracle_match_length(s, 0.75, ours);
    CHECK(mc.median_length == double(want_c));
    CHECK(ml.median_length == double(want_l));
    CHECK(mc.oracle);
    CHECK(ml.oracle);
    CHECK_FALSE(ours.oracle);
    CHECK(mc.strategy_id == "oracle-match-consistency:" + std::to_string(want_c));
    CHECK(ml.strategy_id == "oracle-match-length:" + std::to_string(want_l));
    CHECK(mc.records == evaluate_strategy(Strategy::fixed(want_c), s, 0.75).records);
  }
}

TEST_CASE("oracles refuse a report over different chunks") {
  std::mt19937_64 rng(5);
  const auto s = random_set(6, rng);
  const auto other = random_set(5, rng);
  const auto r = evaluate_strategy(Strategy::fixed(3), other, 0.75);
  CHECK_THROWS_AS(oracle_match_length(s, 0.75, r), ArgumentError);
  CHECK_THROWS_AS(oracle_match_consistency(s, 0.75, r), ArgumentError);
}

TEST_CASE("serialized reports carry the oracle flag and match their records") {
  std::mt19937_64 rng(6);
  const auto s = random_set(9, rng);
  const auto ours = evaluate_strategy(Strategy::fixed(5), s, 0.75);
  const auto ml = oracle_match_length(s, 0.75, ours);
  const auto j = nlohmann::json::parse(report_json(ml, "demo"));
  CHECK(j["dataset"] == "demo");
  CHECK(j["oracle"] == true);
  CHECK(j["median_length"] == 5.0);
  CHECK(j["records"].size() == 9);
  std::size_t met = 0;
  for (const auto& rec : j["records"]) met += rec["meets_target"].get<bool>();
  CHECK(j["sects_pct"].get<double>() == doctest::Approx(100.0 * double(met) / 9.0).epsilon(1e-3));
  CHECK(nlohmann::json::parse(report_json(ours))["oracle"] == false);

  const std::vector<SummaryRow> rows{{"demo", &ours}, {"demo", &ml}};
  const auto csv = summary_csv(rows);
  CHECK(csv.starts_with("dataset,strategy,sects_pct,median_len,oracle\n"));
  CHECK(csv.find("demo,fixed:5," + format_pct(ours.sects_pct) + ",5,false\n") != std::string::npos);
  CHECK(csv.find("demo,oracle-match-length:5," + format_pct(ml.sects_pct) + ",5,true\n") !=
        std::string::npos);

  testing::TempDir dir("report");
  store_report_csv(dir / "r.csv", ours);
  std::ifstream in(dir / "r.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "chunk_id,chosen_length,recall,meets_target");
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  CHECK(n == 9);
}

TEST_CASE("strategy comparison holds together") {
  auto config = benchmark_config(0);
  config.max_epochs = 40;
  config.hidden_width = 16;
  const auto data = generate(small_spec(0));
  const auto ds = prepare_dataset(data.refs, data.queries, data.gt, config, "small");
  const auto model = fit_regressor(ds, config, true);
  const auto cmp = compare_strategies(ds, model);
  const auto test = test_set(ds);
  CHECK(cmp.no_sequence.records == evaluate_strategy(Strategy::fixed(1), test, ds.target).records);
  CHECK(cmp.dynamic.records ==
        evaluate_strategy(Strategy::dynamic(model), test, ds.target).records);
  CHECK(cmp.match_length.oracle);
  CHECK(cmp.match_consistency.oracle);
  CHECK_FALSE(cmp.dynamic.oracle);
  CHECK_FALSE(cmp.train_fixed.oracle);
  CHECK(cmp.train_fixed.median_length ==
        double(baseline_train_fixed(ds.table.select(ds.split.train), ds.target)));
  CHECK(cmp.delta_sects_pct() == cmp.dynamic.sects_pct - cmp.match_length.sects_pct);
  CHECK(cmp.delta_median_length() ==
        cmp.match_consistency.median_length - cmp.dynamic.median_length);
}

TEST_CASE("cross evaluation grid") {
  auto config = benchmark_config(0);
  config.max_epochs = 30;
  config.hidden_width = 16;
  std::vector<PreparedDataset> datasets;
  std::vector<NamedModel> models;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto d = generate(small_spec(seed));
    datasets.push_back(prepare_dataset(d.refs, d.queries, d.gt, config, "set" + std::to_string(seed)));
    models.push_back({"set" + std::to_string(seed), fit_regressor(datasets.back(), config)});
  }
  const auto grid = cross_evaluate(models, datasets, config);
  REQUIRE(grid.reports.size() == 4);
  CHECK(grid.train_names == std::vector<std::string>{"set1", "set2", "set3", "All"});
  CHECK(grid.test_names == std::vector<std::string>{"set1", "set2", "set3"});
  for (const auto& row : grid.reports) CHECK(row.size() == 3);

  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const auto direct = evaluate_strategy(Strategy::dynamic(models[i].model),
                                            test_set(datasets[j]), datasets[j].target);
      CHECK(grid.reports[i][j].records == direct.records);
      CHECK(grid.reports[i][j].sects_pct == direct.sects_pct);
    }

  std::vector<DatasetRows> rows;
  for (const auto& d : datasets) rows.push_back({&d, d.split.train, d.split.valid});
  const auto pooled = fit_regressor(rows, config, true);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(grid.reports[3][j].records ==
          evaluate_strategy(Strategy::dynamic(pooled), test_set(datasets[j]), datasets[j].target)
              .records);

  auto narrow = datasets;
  narrow[1].descriptors = Matrix<double>(narrow[1].descriptors.rows(), 3);
  CHECK_THROWS_AS(cross_evaluate(models, narrow, config), ArgumentError);
  auto relength = datasets;
  relength[2].table.lengths.back() = 23;
  CHECK_THROWS_AS(cross_evaluate(models, relength, config), ArgumentError);
}

}  // TEST_SUITE
