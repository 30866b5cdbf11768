#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "skillscale/parity_data.hpp"

namespace skillscale {

/// A scalar model over (control index, skill bits). Must be callable
/// concurrently if the caller evaluates from several threads.
using ModelFn = std::function<double(int skill, Bits bits)>;

enum class EvalMode { automatic, monte_carlo, exact };

/// Exact enumeration over 2^n_b inputs is capped at n_b <= 20; `automatic`
/// enumerates when n_b <= 14 and samples otherwise.
inline constexpr int kExactBitBudget = 20;
inline constexpr int kAutoExactBits = 14;

struct EvalConfig {
  std::int64_t n_eval = 20000;
  std::uint64_t seed = 0;
  EvalMode mode = EvalMode::automatic;
};

bool uses_exact(const EvalConfig& cfg, int n_b);

/// The inputs at which skill k is evaluated: all 2^n_b words in exact mode,
/// otherwise n_eval uniform draws from a stream keyed by (cfg.seed, k). Two
/// calls with equal arguments return the same set.
std::vector<Bits> evaluation_inputs(const TaskSpec& spec, int k, const EvalConfig& cfg);

/// E_X[g_k f] and E_X[f^2] on skill k's slice.
struct SkillMoments {
  double strength = 0.0;
  double second_moment = 0.0;
};

SkillMoments skill_moments(const ModelFn& f, const TaskSpec& spec, int k, const EvalConfig& cfg);

double skill_strength(const ModelFn& f, const TaskSpec& spec, int k, const EvalConfig& cfg);

/// (S^2 + E f^2 - 2 S R_k) / 2.
double skill_loss(const ModelFn& f, const TaskSpec& spec, double S, int k, const EvalConfig& cfg);

/// Sum over skills of P(k) * L_k.
double total_loss(const ModelFn& f, const SkillDistribution& dist, const TaskSpec& spec, double S,
                  const EvalConfig& cfg);

/// R_k time series. strengths[row][k-1] is R_k at steps[row].
struct EmergenceRecord {
  double S = 1.0;
  int n_s = 0;
  std::vector<std::int64_t> steps;
  std::vector<std::vector<double>> strengths;
  std::vector<double> losses;  // empty, or one per step
  std::map<std::string, std::string> meta;

  void append(std::int64_t step, std::vector<double> row);
  void append(std::int64_t step, std::vector<double> row, double loss);
  std::size_t size() const { return steps.size(); }
  double normalized(std::size_t row, int k) const {
    return strengths[row][static_cast<std::size_t>(k - 1)] / S;
  }
};

/// CSV with header `step,k,R,R_over_S`, one row per (step, skill).
void write_emergence_csv(std::ostream& out, const EmergenceRecord& record);
EmergenceRecord read_emergence_csv(std::istream& in, double S);

}  // namespace skillscale
