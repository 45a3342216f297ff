// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <numeric>

#include "winoattn/error.hpp"
#include "winoattn/harness.hpp"
#include "winoattn/rng.hpp"

namespace winoattn::harness {

SplitPlan make_splits(std::size_t n, const std::string& lang, std::uint64_t seed, int resamples) {
  if (n < 10) throw InvalidArgument("make_splits: '" + lang + "' has " + std::to_string(n) + " examples, need 10");
  if (resamples < 1) throw InvalidArgument("make_splits: need at least one resample");
  SplitPlan plan;
  plan.lang = lang;
  plan.seed = seed;

  const std::size_t n_test = std::max<std::size_t>(1, n / 10);
  const std::size_t n_valid = n / 10;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng test_rng(derive_seed(seed, "test:" + lang));
  test_rng.shuffle(order);
  plan.test.assign(order.begin(), order.begin() + static_cast<long>(n_test));
  std::vector<std::size_t> rest(order.begin() + static_cast<long>(n_test), order.end());
  std::sort(plan.test.begin(), plan.test.end());
  std::sort(rest.begin(), rest.end());

  for (int r = 0; r < resamples; ++r) {
    auto perm = rest;
    Rng rng(derive_seed(seed, "resample:" + lang, static_cast<std::uint64_t>(r)));
    rng.shuffle(perm);
    Resample rs;
    rs.valid.assign(perm.begin(), perm.begin() + static_cast<long>(n_valid));
    rs.train.assign(perm.begin() + static_cast<long>(n_valid), perm.end());
    std::sort(rs.valid.begin(), rs.valid.end());
    std::sort(rs.train.begin(), rs.train.end());
    plan.resamples.push_back(std::move(rs));
  }
  return plan;
}

}  // namespace winoattn::harness
