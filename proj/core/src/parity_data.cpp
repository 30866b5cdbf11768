#include "skillscale/parity_data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "skillscale/csv.hpp"
#include "skillscale/error.hpp"

namespace skillscale {
namespace {

void check_skill_index(const TaskSpec& spec, int k, const char* what) {
  if (k < 1 || k > spec.n_s) {
    throw DomainError(std::string(what) + " index " + std::to_string(k) + " outside [1, " +
                      std::to_string(spec.n_s) + "]");
  }
}

Bits mask_of(const std::vector<int>& subset) {
  Bits mask = 0;
  for (int j : subset) mask |= Bits{1} << j;
  return mask;
}

// C(n, m) saturated at `cap`.
double binomial_capped(int n, int m, double cap) {
  double c = 1.0;
  for (int j = 1; j <= m; ++j) {
    c = c * (n - m + j) / j;
    if (c >= cap) return cap;
  }
  return c;
}

}  // namespace

SkillDistribution make_skill_distribution(double alpha, int n_s) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive");
  if (n_s < 1) throw DomainError("n_s must be at least 1");

  SkillDistribution dist;
  dist.alpha = alpha;
  dist.n_s = n_s;
  dist.weights.resize(static_cast<std::size_t>(n_s));
  for (int k = 1; k <= n_s; ++k) dist.weights[k - 1] = std::pow(k, -(alpha + 1.0));
  // Summing smallest-first keeps the normalization accurate for large n_s.
  double sum = 0.0;
  for (auto it = dist.weights.rbegin(); it != dist.weights.rend(); ++it) sum += *it;
  dist.norm_const = 1.0 / sum;
  for (double& w : dist.weights) w *= dist.norm_const;
  return dist;
}

TaskSpec make_task_spec(int n_s, int n_b, int m, std::uint64_t seed, bool allow_overlap) {
  if (n_s < 1) throw DomainError("n_s must be at least 1");
  if (n_b < 1 || n_b > kMaxSkillBits) {
    throw DomainError("n_b must lie in [1, " + std::to_string(kMaxSkillBits) + "]");
  }
  if (m < 1 || m > n_b) throw DomainError("m must lie in [1, n_b]");

  TaskSpec spec;
  spec.n_s = n_s;
  spec.n_b = n_b;
  spec.m = m;
  spec.allow_overlap = allow_overlap;
  Rng rng = make_rng(seed, Stream::task_spec);

  if (!allow_overlap) {
    if (static_cast<std::int64_t>(m) * n_s > n_b) {
      throw CapacityError("disjoint subsets need m*n_s <= n_b (" + std::to_string(m * n_s) +
                          " > " + std::to_string(n_b) + ")");
    }
    std::vector<int> perm(static_cast<std::size_t>(n_b));
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(std::span<int>(perm), rng);
    for (int k = 0; k < n_s; ++k) {
      std::vector<int> subset(perm.begin() + k * m, perm.begin() + (k + 1) * m);
      std::sort(subset.begin(), subset.end());
      spec.subsets.push_back(std::move(subset));
    }
  } else {
    if (binomial_capped(n_b, m, n_s) < n_s) {
      throw CapacityError("fewer than n_s distinct " + std::to_string(m) + "-subsets of " +
                          std::to_string(n_b) + " bits");
    }
    std::set<Bits> seen;
    std::vector<int> pool(static_cast<std::size_t>(n_b));
    while (static_cast<int>(spec.subsets.size()) < n_s) {
      std::iota(pool.begin(), pool.end(), 0);
      // Partial Fisher-Yates: the first m entries form a uniform m-subset.
      for (int j = 0; j < m; ++j) {
        std::swap(pool[j], pool[j + uniform_index(rng, static_cast<std::size_t>(n_b - j))]);
      }
      std::vector<int> subset(pool.begin(), pool.begin() + m);
      std::sort(subset.begin(), subset.end());
      if (seen.insert(mask_of(subset)).second) spec.subsets.push_back(std::move(subset));
    }
  }
  for (const auto& subset : spec.subsets) spec.masks.push_back(mask_of(subset));
  return spec;
}

int eval_skill_fn(const TaskSpec& spec, int k, int i, Bits bits) {
  check_skill_index(spec, k, "skill");
  check_skill_index(spec, i, "control");
  if (i != k) return 0;
  return parity(bits, spec.mask(k));
}

double eval_target(const TaskSpec& spec, double S, int i, Bits bits) {
  if (!(S > 0.0)) throw DomainError("target scale S must be positive");
  return S * eval_skill_fn(spec, i, i, bits);
}

SampleGenerator::SampleGenerator(const SkillDistribution& dist, const TaskSpec& spec, double S)
    : spec_(spec), S_(S) {
  if (dist.n_s != spec.n_s) {
    throw ConfigError("skill distribution has n_s=" + std::to_string(dist.n_s) +
                      " but task spec has n_s=" + std::to_string(spec.n_s));
  }
  if (!(S > 0.0)) throw DomainError("target scale S must be positive");
  cdf_.resize(dist.weights.size());
  std::partial_sum(dist.weights.begin(), dist.weights.end(), cdf_.begin());
  cdf_.back() = 1.0;
  bit_mask_ = spec.n_b == 64 ? ~Bits{0} : (Bits{1} << spec.n_b) - 1;
}

int SampleGenerator::draw_skill(Rng& rng) const {
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                   static_cast<std::ptrdiff_t>(cdf_.size()) - 1)) +
         1;
}

Bits SampleGenerator::draw_bits(Rng& rng) const { return rng() & bit_mask_; }

Sample SampleGenerator::operator()(Rng& rng) const {
  Sample s;
  s.skill = draw_skill(rng);
  s.bits = draw_bits(rng);
  s.target = S_ * parity(s.bits, spec_.masks[static_cast<std::size_t>(s.skill - 1)]);
  return s;
}

Dataset make_dataset(int n_s, std::vector<Sample> samples) {
  Dataset data;
  data.counts.assign(static_cast<std::size_t>(n_s), 0);
  for (const auto& s : samples) {
    if (s.skill < 1 || s.skill > n_s) {
      throw DomainError("sample skill " + std::to_string(s.skill) + " outside [1, n_s]");
    }
    ++data.counts[static_cast<std::size_t>(s.skill - 1)];
  }
  data.samples = std::move(samples);
  return data;
}

Dataset sample_dataset(const SkillDistribution& dist, const TaskSpec& spec, double S,
                       std::int64_t D, std::uint64_t seed) {
  if (D < 0) throw DomainError("dataset size must be nonnegative");
  const SampleGenerator gen(dist, spec, S);
  Rng rng = make_rng(seed, Stream::dataset);
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(D));
  for (std::int64_t j = 0; j < D; ++j) samples.push_back(gen(rng));
  return make_dataset(spec.n_s, std::move(samples));
}

std::string bits_to_string(Bits bits, int n_b) {
  std::string text(static_cast<std::size_t>(n_b), '0');
  for (int j = 0; j < n_b; ++j) {
    if ((bits >> j) & 1U) text[static_cast<std::size_t>(j)] = '1';
  }
  return text;
}

Bits bits_from_string(std::string_view text) {
  if (text.size() > static_cast<std::size_t>(kMaxSkillBits)) {
    throw ConfigError("bit string longer than 64 characters");
  }
  Bits bits = 0;
  for (std::size_t j = 0; j < text.size(); ++j) {
    if (text[j] == '1') {
      bits |= Bits{1} << j;
    } else if (text[j] != '0') {
      throw ConfigError("bit string may contain only '0' and '1': '" + std::string(text) + "'");
    }
  }
  return bits;
}

void write_dataset_csv(std::ostream& out, const Dataset& data, int n_b) {
  csv::Writer w(out, {"skill", "bits", "target"});
  for (const auto& s : data.samples) w.row(s.skill, bits_to_string(s.bits, n_b), s.target);
}

Dataset read_dataset_csv(std::istream& in, int n_s) {
  const auto table = csv::read(in, {"skill", "bits", "target"});
  std::vector<Sample> samples;
  samples.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Sample s;
    s.skill = static_cast<int>(csv::parse_int(row[0]));
    s.bits = bits_from_string(row[1]);
    s.target = csv::parse_double(row[2]);
    samples.push_back(s);
  }
  return make_dataset(n_s, std::move(samples));
}

std::string task_spec_to_json(const TaskSpec& spec) {
  nlohmann::json j;
  j["n_s"] = spec.n_s;
  j["n_b"] = spec.n_b;
  j["m"] = spec.m;
  j["allow_overlap"] = spec.allow_overlap;
  j["subsets"] = spec.subsets;
  return j.dump(2) + "\n";
}

TaskSpec task_spec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("task spec JSON: ") + e.what());
  }
  TaskSpec spec;
  try {
    spec.n_s = j.at("n_s").get<int>();
    spec.n_b = j.at("n_b").get<int>();
    spec.m = j.at("m").get<int>();
    spec.allow_overlap = j.value("allow_overlap", false);
    spec.subsets = j.at("subsets").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("task spec JSON: ") + e.what());
  }
  if (static_cast<int>(spec.subsets.size()) != spec.n_s) {
    throw ConfigError("task spec JSON: subset count differs from n_s");
  }
  if (spec.n_b < 1 || spec.n_b > kMaxSkillBits) throw ConfigError("task spec JSON: bad n_b");
  std::set<Bits> seen;
  for (const auto& subset : spec.subsets) {
    if (static_cast<int>(subset.size()) != spec.m) {
      throw ConfigError("task spec JSON: subset size differs from m");
    }
    for (int b : subset) {
      if (b < 0 || b >= spec.n_b) throw ConfigError("task spec JSON: bit index out of range");
    }
    const Bits mask = mask_of(subset);
    if (__builtin_popcountll(mask) != spec.m) {
      throw ConfigError("task spec JSON: repeated bit index in a subset");
    }
    if (!seen.insert(mask).second) throw ConfigError("task spec JSON: repeated subset");
    spec.masks.push_back(mask);
  }
  if (!spec.allow_overlap) {
    Bits all = 0;
    for (Bits mask : spec.masks) {
      if (all & mask) throw ConfigError("task spec JSON: overlapping subsets without overlap flag");
      all |= mask;
    }
  }
  return spec;
}

}  // namespace skillscale
