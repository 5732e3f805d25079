#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "fedin/data/csv.hpp"
#include "fedin/data/interactions.hpp"
#include "fedin/data/sample_io.hpp"
#include "fedin/data/synthetic.hpp"
#include "fedin/data/transforms.hpp"
#include "fedin/model/model.hpp"

using namespace fedin;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("fedin_data_" + name);
  std::ofstream(path) << content;
  return path.string();
}

SequenceSample sample_at(std::int64_t ts, int user = 1, double label = 1) {
  SequenceSample s;
  s.item_ids = {1, 2, 0, 0};
  s.valid_len = 2;
  s.target_id = 3;
  s.label = label;
  s.user_id = user;
  s.timestamp = ts;
  return s;
}

std::vector<SequenceSample> history_samples(std::size_t n, Index len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> item(1, 99);
  std::vector<SequenceSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    SequenceSample s;
    s.item_ids.assign(static_cast<size_t>(len), 0);
    s.valid_len = len;
    for (auto& id : s.item_ids) id = item(rng);
    s.target_id = item(rng);
    s.label = static_cast<double>(i % 2);
    s.user_id = static_cast<int>(i);
    s.timestamp = static_cast<std::int64_t>(i);
    out.push_back(s);
  }
  return out;
}

const std::string kFixture = std::string(FEDIN_TEST_DATA_DIR) + "/interactions_1000.csv";

}  // namespace

// ---------------------------------------------------------------- csv

TEST(Csv, SplitsQuotedFields) {
  auto f = split_csv_line(R"(a,"b, c","d ""q""",)");
  ASSERT_TRUE(f);
  EXPECT_EQ(*f, (std::vector<std::string>{"a", "b, c", "d \"q\"", ""}));
  EXPECT_FALSE(split_csv_line(R"(a,"open)"));
  EXPECT_FALSE(split_csv_line(R"("x"y,z)"));
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(*split_csv_line(csv_escape("say \"hi\", ok")), std::vector<std::string>{"say \"hi\", ok"});
}

// ---------------------------------------------------------------- parse

TEST(ParseInteractions, HeaderOnlyGivesEmptyList) {
  const auto r = parse_interactions(temp_file("empty.csv", "user_id,item_id,category_id,timestamp,label\n"));
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE(r.errors.empty());
}

TEST(ParseInteractions, NonIntegerTimestampIsReportedAndExcluded) {
  std::string text = "user_id,item_id,category_id,timestamp,label\n";
  for (int i = 0; i < 150; ++i) text += "u,i" + std::to_string(i) + ",c," + std::to_string(i) + ",1\n";
  text += "u,ix,c,12.5,1\n";
  const auto r = parse_interactions(temp_file("badts.csv", text));
  EXPECT_EQ(r.records.size(), 150u);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].line, 152u);
}

TEST(ParseInteractions, FixtureHasKnownContent) {
  const auto r = parse_interactions(kFixture);
  ASSERT_EQ(r.records.size(), 995u);
  ASSERT_EQ(r.errors.size(), 5u);
  std::set<std::size_t> bad_lines;
  for (const auto& e : r.errors) bad_lines.insert(e.line);
  EXPECT_EQ(bad_lines, (std::set<std::size_t>{102, 252, 501, 779, 903}));
  std::size_t k = 0;
  for (int i = 0; i < 1000; ++i) {
    if (i == 100 || i == 250 || i == 499 || i == 777 || i == 901) continue;
    const InteractionRecord& rec = r.records[k++];
    const int item = (i * 7) % 101;
    EXPECT_EQ(rec.user_id, "u" + std::to_string(i % 37));
    EXPECT_EQ(rec.item_id, i % 50 == 3 ? "item, " + std::to_string(item) : "i" + std::to_string(item));
    EXPECT_EQ(rec.category_id, "c" + std::to_string(item % 5));
    EXPECT_EQ(rec.timestamp, 1000 + i);
    EXPECT_EQ(rec.label, i % 4 ? 1 : 0);
  }
}

TEST(ParseInteractions, MissingColumnIsConfigError) {
  ColumnMap cols;
  cols.timestamp = "ts";
  EXPECT_THROW(parse_interactions(kFixture, cols), ConfigError);
}

TEST(ParseInteractions, TooManyMalformedRowsFails) {
  ColumnMap cols;
  cols.max_malformed_fraction = 0.001;
  EXPECT_THROW(parse_interactions(kFixture, cols), DataError);
  EXPECT_THROW(parse_interactions("/nonexistent/file.csv"), IoError);
}

TEST(ParseInteractions, OptionalColumnsMayBeAbsent) {
  ColumnMap cols;
  cols.category = "";
  cols.label = "";
  const auto r = parse_interactions(temp_file("nolabel.csv", "user_id,item_id,timestamp\na,x,5\na,y,6\n"), cols);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].label, 1);
  EXPECT_EQ(r.records[0].category_id, "");
}

// ---------------------------------------------------------------- build_samples

TEST(BuildSamples, FirstPositiveHasNoHistoryAndIsSkipped) {
  std::vector<InteractionRecord> recs{{"u", "a", "", 3, 1}, {"u", "b", "", 1, 1}, {"u", "c", "", 2, 1},
                                      {"v", "a", "", 1, 1}, {"v", "d", "", 2, 1}};
  const Vocabulary items = item_vocabulary(recs), users = user_vocabulary(recs);
  const auto s = build_samples(recs, 4, 0, items, users, 1);
  ASSERT_EQ(s.size(), 3u);  // u: 2 samples, v: 1
  EXPECT_EQ(s[0].target_id, items.id("c"));
  EXPECT_EQ(s[0].valid_len, 1);
  EXPECT_EQ(s[0].item_ids, (std::vector<int>{items.id("b"), 0, 0, 0}));
  EXPECT_EQ(s[1].target_id, items.id("a"));
  EXPECT_EQ(s[1].item_ids, (std::vector<int>{items.id("b"), items.id("c"), 0, 0}));
}

TEST(BuildSamples, HistoryTruncatedToMostRecent) {
  std::vector<InteractionRecord> recs;
  for (int t = 0; t < 8; ++t) recs.push_back({"u", "i" + std::to_string(t), "", t, 1});
  const Vocabulary items = item_vocabulary(recs), users = user_vocabulary(recs);
  const auto s = build_samples(recs, 3, 0, items, users, 1);
  const SequenceSample& last = s.back();
  EXPECT_EQ(last.target_id, items.id("i7"));
  EXPECT_EQ(last.item_ids, (std::vector<int>{items.id("i4"), items.id("i5"), items.id("i6")}));
  for (const auto& x : s) EXPECT_NO_THROW(validate_sample(x, 3, items.size()));
}

TEST(BuildSamples, SampledNegativesAreUnseenAndReproducible) {
  std::vector<InteractionRecord> recs;
  for (int t = 0; t < 30; ++t) recs.push_back({"u" + std::to_string(t % 3), "i" + std::to_string(t % 12), "", t, 1});
  recs.push_back({"z", "n0", "", 0, 1});
  recs.push_back({"z", "n1", "", 1, 1});
  const Vocabulary items = item_vocabulary(recs), users = user_vocabulary(recs);
  const auto a = build_samples(recs, 5, 2, items, users, 42);
  const auto b = build_samples(recs, 5, 2, items, users, 42);
  EXPECT_EQ(a, b);
  std::map<int, std::set<int>> positives;
  for (const auto& r : recs) positives[users.id(r.user_id)].insert(items.id(r.item_id));
  std::size_t negatives = 0;
  for (const auto& s : a) {
    if (s.label == 0) {
      ++negatives;
      EXPECT_EQ(positives[s.user_id].count(s.target_id), 0u);
    }
  }
  EXPECT_EQ(negatives, 2 * (a.size() / 3));
}

TEST(BuildSamples, ExplicitNegativesUsedDirectly) {
  std::vector<InteractionRecord> recs{{"u", "a", "", 1, 1}, {"u", "b", "", 2, 0}, {"u", "c", "", 3, 1}};
  const Vocabulary items = item_vocabulary(recs), users = user_vocabulary(recs);
  const auto s = build_samples(recs, 4, 5, items, users, 1);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].label, 0);
  EXPECT_EQ(s[0].target_id, items.id("b"));
  EXPECT_EQ(s[1].label, 1);
  EXPECT_EQ(s[1].valid_len, 1);  // only positives enter the history
}

// ---------------------------------------------------------------- temporal_split

TEST(TemporalSplit, FractionsOfTen) {
  std::vector<SequenceSample> v;
  for (int t = 1; t <= 10; ++t) v.push_back(sample_at(t));
  const DataSplits s = temporal_split(v, 0.6, 0.2);
  EXPECT_EQ(s.train.size(), 6u);
  EXPECT_EQ(s.val.size(), 2u);
  EXPECT_EQ(s.test.size(), 2u);
}

TEST(TemporalSplit, BoundaryDuplicatesGoToEarlierSplit) {
  std::vector<SequenceSample> v;
  for (int t : {1, 2, 3, 4, 5, 6, 6, 7, 8, 9}) v.push_back(sample_at(t, static_cast<int>(v.size())));
  const DataSplits s = temporal_split(v, 0.6, 0.2);
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.val.size(), 1u);
  for (const auto& x : s.val) EXPECT_GT(x.timestamp, 6);
}

TEST(TemporalSplit, PartitionOrderedAndInputOrderInvariant) {
  std::mt19937_64 rng(3);
  std::vector<SequenceSample> v;
  for (int i = 0; i < 200; ++i) v.push_back(sample_at(static_cast<std::int64_t>(rng() % 50), i % 7, i % 2));
  const DataSplits a = temporal_split(v, 0.5, 0.25);
  std::shuffle(v.begin(), v.end(), rng);
  const DataSplits b = temporal_split(v, 0.5, 0.25);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train.size() + a.val.size() + a.test.size(), v.size());
  auto max_ts = [](const auto& xs) {
    std::int64_t m = INT64_MIN;
    for (const auto& x : xs) m = std::max(m, x.timestamp);
    return m;
  };
  auto min_ts = [](const auto& xs) {
    std::int64_t m = INT64_MAX;
    for (const auto& x : xs) m = std::min(m, x.timestamp);
    return m;
  };
  EXPECT_LT(max_ts(a.train), min_ts(a.val));
  EXPECT_LT(max_ts(a.val), min_ts(a.test));
}

TEST(TemporalSplit, EmptySplitIsError) {
  std::vector<SequenceSample> v;
  for (int t = 0; t < 5; ++t) v.push_back(sample_at(1, t));
  EXPECT_THROW(temporal_split(v, 0.6, 0.2), DataError);
}

// ---------------------------------------------------------------- synthetic

TEST(Synthetic, FullStrengthFillsPeriodicGrid) {
  SyntheticSpec spec;
  spec.num_users = 30;
  spec.num_items = 200;
  spec.period = 4;
  spec.sequence_length = 16;
  spec.periodic_strength = 1.0;
  spec.samples_per_user = 2;
  const SyntheticDataset d = synth_generate(spec);
  EXPECT_EQ(d.samples.size(), 30u * 2 * 2);
  bool saw_phase_zero = false;
  for (const auto& s : d.samples) {
    const auto u = static_cast<std::size_t>(s.user_id - 1);
    const int phase = d.user_phase[u];
    saw_phase_zero = saw_phase_zero || phase == 0;
    for (int pos = phase; pos < 16; pos += 4) {
      EXPECT_EQ(d.item_category[static_cast<std::size_t>(s.item_ids[static_cast<std::size_t>(pos)])], d.user_category[u]);
    }
    const int target_cat = d.item_category[static_cast<std::size_t>(s.target_id)];
    EXPECT_EQ(target_cat == d.user_category[u], s.label == 1.0);
    EXPECT_EQ(std::count(s.item_ids.begin(), s.item_ids.end(), s.target_id), 0);
  }
  EXPECT_TRUE(saw_phase_zero);
}

TEST(Synthetic, AutocorrelationPeaksAtPeriod) {
  SyntheticSpec spec;
  spec.num_users = 50;
  spec.num_categories = 10;
  spec.period = 5;
  spec.sequence_length = 50;
  spec.periodic_strength = 1.0;
  spec.samples_per_user = 1;
  spec.negatives_per_positive = 0;
  const SyntheticDataset d = synth_generate(spec);
  // Category-indicator autocorrelation, averaged over users.
  std::vector<double> acf(11, 0.0);
  for (const auto& s : d.samples) {
    const int c = d.user_category[static_cast<std::size_t>(s.user_id - 1)];
    std::vector<double> ind(50);
    for (std::size_t i = 0; i < 50; ++i) ind[i] = d.item_category[static_cast<std::size_t>(s.item_ids[i])] == c ? 1 : 0;
    double mean = 0;
    for (double v : ind) mean += v / 50;
    for (std::size_t lag = 1; lag <= 10; ++lag) {
      double a = 0;
      for (std::size_t i = 0; i + lag < 50; ++i) a += (ind[i] - mean) * (ind[i + lag] - mean);
      acf[lag] += a / static_cast<double>(50 - lag);
    }
  }
  const auto best = std::max_element(acf.begin() + 1, acf.begin() + 10) - acf.begin();
  EXPECT_EQ(best, 5);
  EXPECT_GT(acf[5], 0.0);
  EXPECT_LT(acf[1], 0.0);
}

TEST(Synthetic, ZeroStrengthIsUniform) {
  SyntheticSpec spec;
  spec.num_users = 200;
  spec.periodic_strength = 0.0;
  spec.samples_per_user = 5;
  spec.negatives_per_positive = 0;
  const SyntheticDataset d = synth_generate(spec);
  std::vector<double> counts(static_cast<std::size_t>(spec.num_categories));
  double total = 0;
  for (const auto& s : d.samples) {
    for (int id : s.item_ids) {
      counts[static_cast<std::size_t>(d.item_category[static_cast<std::size_t>(id)])] += 1;
      total += 1;
    }
  }
  const double p = 1.0 / spec.num_categories;
  const double sigma = std::sqrt(total * p * (1 - p));
  for (double c : counts) EXPECT_LT(std::abs(c - total * p), 4 * sigma);
}

TEST(Synthetic, SameSeedSameSamples) {
  SyntheticSpec spec;
  spec.num_users = 20;
  spec.seed = 11;
  EXPECT_EQ(synth_generate(spec).samples, synth_generate(spec).samples);
  spec.seed = 12;
  SyntheticSpec other = spec;
  other.seed = 11;
  EXPECT_NE(synth_generate(spec).samples, synth_generate(other).samples);
}

TEST(Synthetic, InvalidSpecsRejected) {
  SyntheticSpec spec;
  spec.num_categories = 1;
  EXPECT_THROW(synth_generate(spec), ConfigError);
  spec = {};
  spec.period = spec.sequence_length;
  EXPECT_THROW(synth_generate(spec), ConfigError);
  spec = {};
  spec.num_items = 20;  // 2 items per category cannot stay unseen in a 50-slot history
  EXPECT_THROW(synth_generate(spec), ConfigError);
}

TEST(Synthetic, EverySampleSatisfiesPaddingDiscipline) {
  SyntheticSpec spec;
  spec.num_users = 20;
  for (const auto& s : synth_generate(spec).samples) EXPECT_NO_THROW(validate_sample(s, 50, spec.num_items + 1));
}

// ---------------------------------------------------------------- corruption

TEST(Corruption, ZeroRateIsIdentity) {
  const auto v = history_samples(20, 10, 1);
  EXPECT_EQ(corrupt_drop(v, 0.0, 3), v);
  EXPECT_EQ(corrupt_replace(v, 0.0, 100, 3), v);
}

TEST(Corruption, DropKeepsLabelsTargetsAndPadding) {
  const auto v = history_samples(200, 10, 2);
  const auto d = corrupt_drop(v, 0.5, 9);
  ASSERT_EQ(d.size(), v.size());
  double kept = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(d[i].label, v[i].label);
    EXPECT_EQ(d[i].target_id, v[i].target_id);
    EXPECT_GE(d[i].valid_len, 1);
    EXPECT_NO_THROW(validate_sample(d[i], 10, 100));
    // Survivors keep their relative order.
    std::size_t j = 0;
    for (Index k = 0; k < d[i].valid_len; ++k) {
      while (j < v[i].item_ids.size() && v[i].item_ids[j] != d[i].item_ids[static_cast<std::size_t>(k)]) ++j;
      EXPECT_LT(j, v[i].item_ids.size());
      ++j;
    }
    kept += static_cast<double>(d[i].valid_len);
  }
  EXPECT_NEAR(kept / (200 * 10), 0.5, 0.05);
  EXPECT_EQ(corrupt_drop(v, 0.5, 9), d);
}

TEST(Corruption, DropAlwaysLeavesOneSurvivor) {
  const auto v = history_samples(50, 4, 3);
  for (const auto& s : corrupt_drop(v, 0.999, 5)) EXPECT_GE(s.valid_len, 1);
}

TEST(Corruption, DropComposesMultiplicatively) {
  const auto v = history_samples(1000, 20, 4);
  const double rho = 0.3, rho2 = 0.4;
  const auto once = corrupt_drop(v, rho, 10);
  const auto twice = corrupt_drop(once, rho2, 11);
  double kept = 0;
  for (const auto& s : twice) kept += static_cast<double>(s.valid_len);
  const double n = 1000.0 * 20;
  const double p = (1 - rho) * (1 - rho2);
  EXPECT_NEAR(kept / n, p, 3 * std::sqrt(p * (1 - p) / n) + 1000.0 / n * 0.01);
}

TEST(Corruption, ReplaceFullRateSubstitutesEveryPosition) {
  const auto v = history_samples(100, 10, 5);
  const auto r = corrupt_replace(v, 1.0, 100000, 6);
  std::size_t same = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(r[i].valid_len, v[i].valid_len);
    EXPECT_EQ(r[i].target_id, v[i].target_id);
    for (std::size_t k = 0; k < 10; ++k) same += r[i].item_ids[k] == v[i].item_ids[k];
  }
  EXPECT_LE(same, 2u);
  EXPECT_EQ(corrupt_replace(v, 1.0, 100000, 6), r);
  EXPECT_NE(corrupt_replace(v, 1.0, 100000, 7), r);
}

// ---------------------------------------------------------------- sample csv

TEST(SampleCsv, RoundTrip) {
  SyntheticSpec spec;
  spec.num_users = 10;
  spec.sequence_length = 20;
  const SyntheticDataset d = synth_generate(spec);
  auto samples = d.samples;
  samples[0].valid_len = 3;
  std::fill(samples[0].item_ids.begin() + 3, samples[0].item_ids.end(), 0);
  const auto path = (std::filesystem::temp_directory_path() / "fedin_samples_rt.csv").string();
  write_samples_csv(path, samples, d.item_category, {"seed=1"});
  const SampleFile f = read_samples_csv(path, 20);
  EXPECT_EQ(f.samples, samples);
  EXPECT_EQ(f.comments, std::vector<std::string>{"seed=1"});
  EXPECT_EQ(f.target_category[0], d.item_category[static_cast<std::size_t>(samples[0].target_id)]);
  EXPECT_THROW(read_samples_csv(path, 10), DataError);
}
