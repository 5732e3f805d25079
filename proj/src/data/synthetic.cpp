#include "fedin/data/synthetic.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "fedin/model/config.hpp"
#include "fedin/numerics/errors.hpp"

namespace fedin {

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("synthetic spec: " + msg); };
  if (num_users < 1) fail("num_users must be positive");
  if (num_categories < 2) fail("num_categories must be >= 2");
  if (num_items < num_categories || num_items % num_categories != 0) {
    fail("num_items (" + std::to_string(num_items) + ") must be a positive multiple of num_categories (" +
         std::to_string(num_categories) + ")");
  }
  if (period < 2) fail("period must be >= 2");
  if (sequence_length < 1) fail("sequence_length must be positive");
  if (period >= sequence_length) fail("period must be smaller than sequence_length");
  if (!(periodic_strength >= 0.0 && periodic_strength <= 1.0)) fail("periodic_strength must lie in [0, 1]");
  if (negatives_per_positive < 0) fail("negatives_per_positive must be >= 0");
  if (samples_per_user < 1) fail("samples_per_user must be positive");
}

int category_first_item(const SyntheticSpec& spec, int category) { return 1 + category * spec.items_per_category(); }

SyntheticDataset synth_generate(const SyntheticSpec& spec) {
  spec.validate();
  const int m = spec.items_per_category();
  const auto len = static_cast<std::size_t>(spec.sequence_length);
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> pick_category(0, spec.num_categories - 1);
  std::uniform_int_distribution<int> pick_other(0, spec.num_categories - 2);
  std::uniform_int_distribution<int> pick_in_block(0, m - 1);
  std::uniform_int_distribution<int> pick_phase(0, spec.period - 1);
  std::bernoulli_distribution periodic(spec.periodic_strength);

  SyntheticDataset data;
  data.item_category.assign(static_cast<std::size_t>(spec.num_items) + 1, -1);
  for (int id = 1; id <= spec.num_items; ++id) data.item_category[static_cast<std::size_t>(id)] = (id - 1) / m;
  for (int u = 0; u < spec.num_users; ++u) {
    data.user_category.push_back(pick_category(rng));
    data.user_phase.push_back(pick_phase(rng));
  }

  auto unseen_in = [&](int category, const std::set<int>& seen) {
    std::vector<int> pool;
    for (int id = category_first_item(spec, category); id < category_first_item(spec, category) + m; ++id) {
      if (seen.count(id) == 0) pool.push_back(id);
    }
    return pool;
  };

  for (int j = 0; j < spec.samples_per_user; ++j) {
    for (int u = 0; u < spec.num_users; ++u) {
      const int preferred = data.user_category[static_cast<std::size_t>(u)];
      const int phase = data.user_phase[static_cast<std::size_t>(u)];
      SequenceSample s;
      s.item_ids.resize(len);
      for (std::size_t pos = 0; pos < len; ++pos) {
        const bool on_grid = (static_cast<int>(pos) - phase) % spec.period == 0 && static_cast<int>(pos) >= phase;
        const int category = on_grid && periodic(rng) ? preferred : pick_category(rng);
        s.item_ids[pos] = category_first_item(spec, category) + pick_in_block(rng);
      }
      s.valid_len = spec.sequence_length;
      s.user_id = u + 1;
      s.timestamp = static_cast<std::int64_t>(j) * spec.num_users + u;
      const std::set<int> seen(s.item_ids.begin(), s.item_ids.end());

      const std::vector<int> pos_pool = unseen_in(preferred, seen);
      if (pos_pool.empty()) {
        throw ConfigError("synthetic spec: category " + std::to_string(preferred) +
                          " has no item unseen in a history; increase num_items");
      }
      SequenceSample positive = s;
      positive.target_id = pos_pool[std::uniform_int_distribution<std::size_t>(0, pos_pool.size() - 1)(rng)];
      positive.label = 1;
      data.samples.push_back(std::move(positive));

      for (int n = 0; n < spec.negatives_per_positive; ++n) {
        int category = pick_other(rng);
        if (category >= preferred) ++category;
        std::vector<int> neg_pool = unseen_in(category, seen);
        for (int tries = 0; neg_pool.empty() && tries < spec.num_categories; ++tries) {
          category = (category + 1) % spec.num_categories;
          if (category != preferred) neg_pool = unseen_in(category, seen);
        }
        if (neg_pool.empty()) throw ConfigError("synthetic spec: no unseen negative item; increase num_items");
        SequenceSample negative = s;
        negative.target_id = neg_pool[std::uniform_int_distribution<std::size_t>(0, neg_pool.size() - 1)(rng)];
        negative.label = 0;
        data.samples.push_back(std::move(negative));
      }
    }
  }
  return data;
}

}  // namespace fedin
