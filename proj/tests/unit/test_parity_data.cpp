#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "skillscale/error.hpp"
#include "skillscale/parity_data.hpp"

using namespace skillscale;

namespace {

// Direct normalization of k^{-(alpha+1)}, summed in the obvious order.
std::vector<double> oracle_weights(double alpha, int n_s) {
  std::vector<double> w(static_cast<std::size_t>(n_s));
  double z = 0.0;
  for (int k = 1; k <= n_s; ++k) z += std::pow(k, -(alpha + 1.0));
  for (int k = 1; k <= n_s; ++k) w[static_cast<std::size_t>(k - 1)] = std::pow(k, -(alpha + 1.0)) / z;
  return w;
}

}  // namespace

TEST_SUITE("parity_data") {
  TEST_CASE("skill distribution matches direct normalization") {
    for (double alpha : {0.3, 0.6, 0.9, 2.0}) {
      for (int n_s : {1, 5, 1000}) {
        const auto dist = make_skill_distribution(alpha, n_s);
        const auto expect = oracle_weights(alpha, n_s);
        REQUIRE(dist.weights.size() == expect.size());
        double sum = 0.0;
        for (std::size_t k = 0; k < expect.size(); ++k) {
          CHECK(dist.weights[k] == doctest::Approx(expect[k]).epsilon(1e-12));
          sum += dist.weights[k];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::is_sorted(dist.weights.rbegin(), dist.weights.rend()));
      }
    }
    const auto five = make_skill_distribution(0.6, 5);
    CHECK(five.weight(1) == doctest::Approx(0.5927).epsilon(1e-3));
    CHECK(five.weight(5) == doctest::Approx(0.0452).epsilon(2e-3));
    CHECK(make_skill_distribution(0.9, 5).weight(1) == doctest::Approx(0.662).epsilon(1e-3));
    CHECK(make_skill_distribution(0.6, 1).weights == std::vector<double>{1.0});
  }

  TEST_CASE("skill distribution rejects bad input") {
    CHECK_THROWS_AS(make_skill_distribution(0.0, 5), DomainError);
    CHECK_THROWS_AS(make_skill_distribution(-1.0, 5), DomainError);
    CHECK_THROWS_AS(make_skill_distribution(0.6, 0), DomainError);
    CHECK_THROWS_AS(make_skill_distribution(0.6, 5).weight(6), std::out_of_range);
  }

  TEST_CASE("disjoint task spec") {
    const auto spec = make_task_spec(5, 32, 3, 42);
    std::set<int> used;
    for (const auto& s : spec.subsets) {
      CHECK(s.size() == 3);
      CHECK(std::is_sorted(s.begin(), s.end()));
      for (int b : s) {
        CHECK(b >= 0);
        CHECK(b < 32);
        used.insert(b);
      }
    }
    CHECK(used.size() == 15);
    for (int k = 1; k <= 5; ++k) {
      Bits mask = 0;
      for (int b : spec.subsets[static_cast<std::size_t>(k - 1)]) mask |= Bits{1} << b;
      CHECK(spec.mask(k) == mask);
    }
    const auto again = make_task_spec(5, 32, 3, 42);
    CHECK(again.subsets == spec.subsets);
    CHECK(make_task_spec(5, 32, 3, 43).subsets != spec.subsets);
    const auto forced = make_task_spec(1, 3, 3, 9);
    CHECK(forced.subsets[0] == std::vector<int>{0, 1, 2});
  }

  TEST_CASE("task spec capacity and domain errors") {
    CHECK_THROWS_AS(make_task_spec(6, 16, 3, 0), CapacityError);
    CHECK_THROWS_AS(make_task_spec(11, 5, 2, 0, true), CapacityError);  // C(5,2) = 10
    CHECK_NOTHROW(make_task_spec(10, 5, 2, 0, true));
    CHECK_THROWS_AS(make_task_spec(1, 65, 3, 0), DomainError);
    CHECK_THROWS_AS(make_task_spec(1, 8, 9, 0), DomainError);
    CHECK_THROWS_AS(make_task_spec(0, 8, 2, 0), DomainError);
  }

  TEST_CASE("overlapping task spec has distinct subsets") {
    const auto spec = make_task_spec(10, 5, 2, 3, true);
    std::set<Bits> masks(spec.masks.begin(), spec.masks.end());
    CHECK(masks.size() == 10);
    for (Bits m : spec.masks) CHECK(__builtin_popcountll(m) == 2);
  }

  TEST_CASE("skill functions follow the parity table") {
    TaskSpec spec = make_task_spec(2, 6, 3, 1);
    const auto& s1 = spec.subsets[0];
    const auto bits_of = [&](std::initializer_list<int> values) {
      Bits x = 0;
      int j = 0;
      for (int v : values) {
        if (v) x |= Bits{1} << s1[static_cast<std::size_t>(j)];
        ++j;
      }
      return x;
    };
    CHECK(eval_skill_fn(spec, 1, 1, bits_of({1, 1, 0})) == 1);
    CHECK(eval_skill_fn(spec, 1, 1, bits_of({0, 1, 0})) == -1);
    CHECK(eval_skill_fn(spec, 1, 1, bits_of({0, 0, 0})) == 1);
    for (Bits x = 0; x < 64; ++x) CHECK(eval_skill_fn(spec, 1, 2, x) == 0);
    CHECK(eval_target(spec, 5.0, 1, bits_of({1, 1, 0})) == 5.0);
    CHECK(eval_target(spec, 5.0, 1, bits_of({1, 1, 1})) == -5.0);
    CHECK_THROWS_AS(eval_skill_fn(spec, 3, 1, 0), DomainError);
  }

  TEST_CASE("target has norm S squared by enumeration") {
    const auto spec = make_task_spec(4, 12, 3, 5);
    const double S = 3.5;
    for (int i = 1; i <= 4; ++i) {
      double sum = 0.0;
      for (Bits x = 0; x < (Bits{1} << 12); ++x) {
        const double y = eval_target(spec, S, i, x);
        sum += y * y;
      }
      CHECK(sum / 4096.0 == S * S);
    }
  }

  TEST_CASE("sample counts concentrate on the skill weights") {
    const auto dist = make_skill_distribution(0.6, 5);
    const auto spec = make_task_spec(5, 32, 3, 0);
    const std::int64_t D = 1000000;
    const auto data = sample_dataset(dist, spec, 5.0, D, 17);
    CHECK(data.size() == D);
    std::int64_t total = 0;
    for (int k = 1; k <= 5; ++k) total += data.count(k);
    CHECK(total == D);
    const double p = dist.weight(1);
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(D));
    CHECK(std::abs(static_cast<double>(data.count(1)) / D - p) <= 3.0 * sigma);
    for (const auto& s : data.samples) {
      if (s.bits >> 32) FAIL("bits beyond n_b");
    }
    for (std::size_t j = 0; j < 1000; ++j) {
      const auto& s = data.samples[j];
      CHECK(s.target == eval_target(spec, 5.0, s.skill, s.bits));
    }
  }

  TEST_CASE("dataset edge cases") {
    const auto dist = make_skill_distribution(0.6, 5);
    const auto spec = make_task_spec(5, 16, 3, 0);
    const auto empty = sample_dataset(dist, spec, 5.0, 0, 1);
    CHECK(empty.size() == 0);
    CHECK(empty.counts == std::vector<std::int64_t>(5, 0));
    const auto one = make_skill_distribution(0.6, 1);
    const auto single = sample_dataset(one, make_task_spec(1, 16, 3, 0), 5.0, 321, 1);
    CHECK(single.counts == std::vector<std::int64_t>{321});
    CHECK_THROWS_AS(sample_dataset(dist, spec, 5.0, -1, 1), DomainError);
    CHECK_THROWS_AS(sample_dataset(one, spec, 5.0, 10, 1), ConfigError);
    const auto a = sample_dataset(dist, spec, 5.0, 500, 99);
    const auto b = sample_dataset(dist, spec, 5.0, 500, 99);
    CHECK(std::equal(a.samples.begin(), a.samples.end(), b.samples.begin(),
                     [](const Sample& x, const Sample& y) {
                       return x.skill == y.skill && x.bits == y.bits && x.target == y.target;
                     }));
  }

  TEST_CASE("bit strings and dataset CSV round-trip") {
    CHECK(bits_to_string(0b1011, 6) == "110100");
    CHECK(bits_from_string("110100") == 0b1011);
    CHECK_THROWS_AS(bits_from_string("10x"), ConfigError);
    const auto dist = make_skill_distribution(0.6, 3);
    const auto spec = make_task_spec(3, 20, 3, 4);
    const auto data = sample_dataset(dist, spec, 2.5, 200, 4);
    std::stringstream buf;
    write_dataset_csv(buf, data, 20);
    CHECK(buf.str().rfind("skill,bits,target\n", 0) == 0);
    const auto back = read_dataset_csv(buf, 3);
    REQUIRE(back.size() == data.size());
    CHECK(back.counts == data.counts);
    for (std::size_t j = 0; j < data.samples.size(); ++j) {
      CHECK(back.samples[j].bits == data.samples[j].bits);
      CHECK(back.samples[j].target == data.samples[j].target);
    }
  }

  TEST_CASE("task spec JSON round-trip and validation") {
    const auto spec = make_task_spec(4, 16, 3, 8);
    const auto back = task_spec_from_json(task_spec_to_json(spec));
    CHECK(back.subsets == spec.subsets);
    CHECK(back.masks == spec.masks);
    CHECK_THROWS_AS(task_spec_from_json("{"), ConfigError);
    CHECK_THROWS_AS(
        task_spec_from_json(R"({"n_s":2,"n_b":8,"m":2,"allow_overlap":false,"subsets":[[0,1],[1,2]]})"),
        ConfigError);
    CHECK_THROWS_AS(
        task_spec_from_json(R"({"n_s":1,"n_b":8,"m":2,"allow_overlap":false,"subsets":[[0,9]]})"),
        ConfigError);
  }
}
