#include "skillscale/metrics.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "skillscale/csv.hpp"
#include "skillscale/error.hpp"

namespace skillscale {

bool uses_exact(const EvalConfig& cfg, int n_b) {
  switch (cfg.mode) {
    case EvalMode::exact:
      if (n_b > kExactBitBudget) {
        throw BudgetError("exact enumeration needs n_b <= " + std::to_string(kExactBitBudget) +
                          ", got " + std::to_string(n_b));
      }
      return true;
    case EvalMode::monte_carlo:
      return false;
    case EvalMode::automatic:
      return n_b <= kAutoExactBits;
  }
  return false;
}

std::vector<Bits> evaluation_inputs(const TaskSpec& spec, int k, const EvalConfig& cfg) {
  if (k < 1 || k > spec.n_s) throw DomainError("skill index out of range");
  std::vector<Bits> inputs;
  if (uses_exact(cfg, spec.n_b)) {
    const Bits n = Bits{1} << spec.n_b;
    inputs.resize(static_cast<std::size_t>(n));
    for (Bits x = 0; x < n; ++x) inputs[x] = x;
    return inputs;
  }
  if (cfg.n_eval < 1) throw DomainError("n_eval must be positive");
  const Bits mask = spec.n_b == 64 ? ~Bits{0} : (Bits{1} << spec.n_b) - 1;
  Rng rng = make_rng(cfg.seed, Stream::evaluation, static_cast<std::uint64_t>(k));
  inputs.resize(static_cast<std::size_t>(cfg.n_eval));
  for (auto& x : inputs) x = rng() & mask;
  return inputs;
}

SkillMoments skill_moments(const ModelFn& f, const TaskSpec& spec, int k, const EvalConfig& cfg) {
  const auto inputs = evaluation_inputs(spec, k, cfg);
  const Bits mask = spec.mask(k);
  double corr = 0.0;
  double sq = 0.0;
  for (Bits x : inputs) {
    const double y = f(k, x);
    corr += parity(x, mask) * y;
    sq += y * y;
  }
  const double n = static_cast<double>(inputs.size());
  return {corr / n, sq / n};
}

double skill_strength(const ModelFn& f, const TaskSpec& spec, int k, const EvalConfig& cfg) {
  return skill_moments(f, spec, k, cfg).strength;
}

double skill_loss(const ModelFn& f, const TaskSpec& spec, double S, int k, const EvalConfig& cfg) {
  const auto mom = skill_moments(f, spec, k, cfg);
  return 0.5 * (S * S + mom.second_moment - 2.0 * S * mom.strength);
}

double total_loss(const ModelFn& f, const SkillDistribution& dist, const TaskSpec& spec, double S,
                  const EvalConfig& cfg) {
  if (dist.n_s != spec.n_s) throw ConfigError("skill distribution and task spec disagree on n_s");
  double loss = 0.0;
  for (int k = 1; k <= spec.n_s; ++k) loss += dist.weight(k) * skill_loss(f, spec, S, k, cfg);
  return loss;
}

void EmergenceRecord::append(std::int64_t step, std::vector<double> row) {
  if (n_s == 0) n_s = static_cast<int>(row.size());
  if (static_cast<int>(row.size()) != n_s) throw ShapeError("record row has wrong skill count");
  if (!steps.empty() && step <= steps.back()) throw DomainError("record steps must increase");
  for (double r : row) {
    if (!std::isfinite(r)) throw NumericError("non-finite skill strength at step " +
                                              std::to_string(step));
  }
  steps.push_back(step);
  strengths.push_back(std::move(row));
}

void EmergenceRecord::append(std::int64_t step, std::vector<double> row, double loss) {
  if (losses.size() != steps.size()) throw ShapeError("record mixes rows with and without loss");
  append(step, std::move(row));
  losses.push_back(loss);
}

void write_emergence_csv(std::ostream& out, const EmergenceRecord& record) {
  csv::Writer w(out, {"step", "k", "R", "R_over_S"});
  for (std::size_t row = 0; row < record.size(); ++row) {
    for (int k = 1; k <= record.n_s; ++k) {
      const double r = record.strengths[row][static_cast<std::size_t>(k - 1)];
      w.row(static_cast<long long>(record.steps[row]), k, r, r / record.S);
    }
  }
}

EmergenceRecord read_emergence_csv(std::istream& in, double S) {
  const auto table = csv::read(in, {"step", "k", "R", "R_over_S"});
  EmergenceRecord record;
  record.S = S;
  std::vector<double> row;
  std::int64_t current = -1;
  for (const auto& fields : table.rows) {
    const auto step = csv::parse_int(fields[0]);
    const auto k = csv::parse_int(fields[1]);
    if (step != current) {
      if (!row.empty()) record.append(current, std::move(row));
      row.clear();
      current = step;
    }
    if (k != static_cast<std::int64_t>(row.size()) + 1) {
      throw ConfigError("emergence CSV: skills must be listed 1..n_s for each step");
    }
    row.push_back(csv::parse_double(fields[2]));
  }
  if (!row.empty()) record.append(current, std::move(row));
  return record;
}

}  // namespace skillscale
