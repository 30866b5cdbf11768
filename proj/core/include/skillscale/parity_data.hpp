#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "skillscale/rng.hpp"

namespace skillscale {

/// Skill-bit vectors are packed into one machine word: bit j of the word is
/// skill bit j. This caps n_b at 64.
using Bits = std::uint64_t;
inline constexpr int kMaxSkillBits = 64;

/// Power-law skill frequencies P(k) = A * k^-(alpha+1), k = 1..n_s.
struct SkillDistribution {
  double alpha = 0.0;
  int n_s = 0;
  double norm_const = 0.0;
  std::vector<double> weights;  // weights[k-1] is P(k)

  double weight(int k) const { return weights.at(static_cast<std::size_t>(k - 1)); }
};

SkillDistribution make_skill_distribution(double alpha, int n_s);

/// Which sparse bits each skill reads. Skills are numbered from 1.
struct TaskSpec {
  int n_s = 0;
  int n_b = 0;
  int m = 0;
  bool allow_overlap = false;
  std::vector<std::vector<int>> subsets;  // subsets[k-1], sorted ascending
  std::vector<Bits> masks;                // masks[k-1] has the subset's bits set

  Bits mask(int k) const { return masks.at(static_cast<std::size_t>(k - 1)); }
};

/// Disjoint subsets are consecutive chunks of a seeded permutation of
/// [0, n_b); overlapping subsets are drawn independently and must be distinct.
TaskSpec make_task_spec(int n_s, int n_b, int m, std::uint64_t seed, bool allow_overlap = false);

/// +1 when the masked bits have even popcount, -1 otherwise.
inline int parity(Bits bits, Bits mask) {
  return (__builtin_popcountll(bits & mask) & 1) ? -1 : 1;
}

/// g_k evaluated at control index i: 0 off-support, otherwise the parity of
/// skill k's sparse bits.
int eval_skill_fn(const TaskSpec& spec, int k, int i, Bits bits);

/// S * g_i(i, bits).
double eval_target(const TaskSpec& spec, double S, int i, Bits bits);

struct Sample {
  int skill = 1;
  Bits bits = 0;
  double target = 0.0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::int64_t> counts;  // counts[k-1] is d_k

  std::int64_t size() const { return static_cast<std::int64_t>(samples.size()); }
  std::int64_t count(int k) const { return counts.at(static_cast<std::size_t>(k - 1)); }
};

/// Draws i.i.d. (skill, bits, target) triples. Skill sampling is by
/// inverse-CDF on 53-bit uniforms so the stream is identical on every
/// standard library.
class SampleGenerator {
 public:
  SampleGenerator(const SkillDistribution& dist, const TaskSpec& spec, double S);

  Sample operator()(Rng& rng) const;
  int draw_skill(Rng& rng) const;
  Bits draw_bits(Rng& rng) const;

  const TaskSpec& spec() const { return spec_; }
  double target_scale() const { return S_; }

 private:
  TaskSpec spec_;
  double S_;
  std::vector<double> cdf_;
  Bits bit_mask_;
};

Dataset sample_dataset(const SkillDistribution& dist, const TaskSpec& spec, double S,
                       std::int64_t D, std::uint64_t seed);

/// Builds a dataset (and its counts) from explicit samples.
Dataset make_dataset(int n_s, std::vector<Sample> samples);

/// Character j is skill bit j.
std::string bits_to_string(Bits bits, int n_b);
Bits bits_from_string(std::string_view text);

/// CSV with header `skill,bits,target`.
void write_dataset_csv(std::ostream& out, const Dataset& data, int n_b);
Dataset read_dataset_csv(std::istream& in, int n_s);

std::string task_spec_to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(const std::string& text);

}  // namespace skillscale
