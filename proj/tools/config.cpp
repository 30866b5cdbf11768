#include "config.hpp"

#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "skillscale/csv.hpp"
#include "skillscale/error.hpp"

namespace skillscale::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Thrown by the value parsers; the caller adds the key and location.
struct BadValue {
  std::string requirement;
};

double real(std::string_view v) {
  try {
    return csv::parse_double(v);
  } catch (const ConfigError&) {
    throw BadValue{"a real number"};
  }
}

std::int64_t integer(std::string_view v) {
  try {
    return csv::parse_int(v);
  } catch (const ConfigError&) {
    throw BadValue{"an integer"};
  }
}

double positive(std::string_view v) {
  const double x = real(v);
  if (!(x > 0.0)) throw BadValue{"a positive real"};
  return x;
}

std::int64_t at_least(std::string_view v, std::int64_t lo) {
  const auto x = integer(v);
  if (x < lo) throw BadValue{"an integer >= " + std::to_string(lo)};
  return x;
}

int small_at_least(std::string_view v, int lo, int hi = 1 << 30) {
  const auto x = at_least(v, lo);
  if (x > hi) throw BadValue{"an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"};
  return static_cast<int>(x);
}

struct KeySpec {
  std::string_view name;
  std::function<void(CliConfig&, std::string_view)> set;
  std::function<std::string(const CliConfig&)> get;
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"alpha", [](CliConfig& c, std::string_view v) { c.alpha = positive(v); },
       [](const CliConfig& c) { return csv::format(c.alpha); }},
      {"n_s", [](CliConfig& c, std::string_view v) { c.n_s = small_at_least(v, 1); },
       [](const CliConfig& c) { return csv::format(c.n_s); }},
      {"n_b", [](CliConfig& c, std::string_view v) { c.n_b = small_at_least(v, 1, 64); },
       [](const CliConfig& c) { return csv::format(c.n_b); }},
      {"m", [](CliConfig& c, std::string_view v) { c.m = small_at_least(v, 1, 64); },
       [](const CliConfig& c) { return csv::format(c.m); }},
      {"S", [](CliConfig& c, std::string_view v) { c.S = positive(v); },
       [](const CliConfig& c) { return csv::format(c.S); }},
      {"eta", [](CliConfig& c, std::string_view v) { c.eta = positive(v); },
       [](const CliConfig& c) { return csv::format(c.eta); }},
      {"width", [](CliConfig& c, std::string_view v) { c.width = small_at_least(v, 1); },
       [](const CliConfig& c) { return csv::format(c.width); }},
      {"lr", [](CliConfig& c, std::string_view v) { c.lr = positive(v); },
       [](const CliConfig& c) { return csv::format(c.lr); }},
      {"init_std",
       [](CliConfig& c, std::string_view v) {
         const double x = real(v);
         if (!(x >= 0.0)) throw BadValue{"a nonnegative real"};
         c.init_std = x;
       },
       [](const CliConfig& c) { return csv::format(c.init_std); }},
      {"batch", [](CliConfig& c, std::string_view v) { c.batch = small_at_least(v, 1); },
       [](const CliConfig& c) { return csv::format(c.batch); }},
      {"steps", [](CliConfig& c, std::string_view v) { c.steps = at_least(v, 0); },
       [](const CliConfig& c) { return csv::format(c.steps); }},
      {"optimizer",
       [](CliConfig& c, std::string_view v) {
         if (v == "sgd") c.optimizer = Optimizer::sgd;
         else if (v == "adam") c.optimizer = Optimizer::adam;
         else throw BadValue{"one of sgd, adam"};
       },
       [](const CliConfig& c) { return std::string(c.optimizer == Optimizer::adam ? "adam" : "sgd"); }},
      {"weight_decay",
       [](CliConfig& c, std::string_view v) {
         if (v == "auto") {
           c.weight_decay.reset();
           return;
         }
         const double x = real(v);
         if (!(x >= 0.0)) throw BadValue{"'auto' or a nonnegative real"};
         c.weight_decay = x;
       },
       [](const CliConfig& c) {
         return c.weight_decay ? csv::format(*c.weight_decay) : std::string("auto");
       }},
      {"halve_lr_every", [](CliConfig& c, std::string_view v) { c.halve_lr_every = at_least(v, 0); },
       [](const CliConfig& c) { return csv::format(c.halve_lr_every); }},
      {"measure_every", [](CliConfig& c, std::string_view v) { c.measure_every = at_least(v, 1); },
       [](const CliConfig& c) { return csv::format(c.measure_every); }},
      {"eval_samples", [](CliConfig& c, std::string_view v) { c.eval_samples = at_least(v, 1); },
       [](const CliConfig& c) { return csv::format(c.eval_samples); }},
      {"data_mode",
       [](CliConfig& c, std::string_view v) {
         if (v == "online") c.data_mode = DataMode::online;
         else if (v == "fixed") c.data_mode = DataMode::fixed;
         else throw BadValue{"one of online, fixed"};
       },
       [](const CliConfig& c) {
         return std::string(c.data_mode == DataMode::fixed ? "fixed" : "online");
       }},
      {"D", [](CliConfig& c, std::string_view v) { c.D = at_least(v, 1); },
       [](const CliConfig& c) { return csv::format(c.D); }},
      {"D_c", [](CliConfig& c, std::string_view v) { c.D_c = at_least(v, 1); },
       [](const CliConfig& c) { return csv::format(c.D_c); }},
      {"N_c", [](CliConfig& c, std::string_view v) { c.N_c = at_least(v, 1); },
       [](const CliConfig& c) { return csv::format(c.N_c); }},
      {"b2",
       [](CliConfig& c, std::string_view v) {
         const double x = real(v);
         if (!(x > 0.0 && x <= 1.0)) throw BadValue{"a real in (0, 1]"};
         c.b2 = x;
       },
       [](const CliConfig& c) { return csv::format(c.b2); }},
      {"seed",
       [](CliConfig& c, std::string_view v) {
         std::uint64_t x = 0;
         const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
         if (ec != std::errc{} || ptr != v.data() + v.size()) {
           throw BadValue{"an unsigned 64-bit integer"};
         }
         c.seed = x;
       },
       [](const CliConfig& c) { return csv::format(c.seed); }},
      {"out_dir",
       [](CliConfig& c, std::string_view v) {
         if (v.empty()) throw BadValue{"a nonempty path"};
         c.out_dir = std::string(v);
       },
       [](const CliConfig& c) { return c.out_dir; }},
  };
  return table;
}

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void apply_assignment(CliConfig& cfg, std::string_view line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(where + ": expected key=value, got '" + std::string(line) + "'");
  }
  const auto key = trim(line.substr(0, eq));
  const auto value = trim(line.substr(eq + 1));
  const KeySpec* spec = find_key(key);
  if (spec == nullptr) throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
  try {
    spec->set(cfg, value);
  } catch (const BadValue& bad) {
    throw ConfigError(where + ": " + std::string(key) + " must be " + bad.requirement +
                      ", got '" + std::string(value) + "'");
  }
}

}  // namespace

TrainConfig CliConfig::train_config() const {
  TrainConfig t;
  t.width = width;
  t.lr = lr;
  t.init_std = init_std;
  t.batch = batch;
  t.steps = steps;
  t.optimizer = optimizer;
  t.weight_decay = weight_decay;
  if (halve_lr_every > 0) t.halve_lr_every = halve_lr_every;
  t.measure_every = measure_every;
  t.data_mode = data_mode;
  t.seed = seed;
  t.eval.n_eval = eval_samples;
  t.eval.seed = seed;
  return t;
}

std::span<const std::string_view> config_keys() {
  static const std::vector<std::string_view> keys = [] {
    std::vector<std::string_view> out;
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
  }();
  return keys;
}

CliConfig default_config() {
  CliConfig cfg;
  const char* env = std::getenv(kOutDirEnv);
  cfg.out_dir = env != nullptr && *env != '\0' ? env : "out";
  return cfg;
}

void apply_config_text(CliConfig& cfg, std::string_view text, std::string_view source) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    apply_assignment(cfg, line, std::string(source) + ":" + std::to_string(line_no));
  }
}

void apply_override(CliConfig& cfg, std::string_view assignment) {
  apply_assignment(cfg, trim(assignment), "override '" + std::string(assignment) + "'");
}

CliConfig parse_config(const std::optional<std::filesystem::path>& path,
                       std::span<const std::string> overrides) {
  CliConfig cfg = default_config();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config file '" + path->string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    apply_config_text(cfg, buf.str(), path->string());
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

std::string to_text(const CliConfig& cfg) {
  std::string out;
  for (const auto& k : key_table()) {
    out += k.name;
    out += '=';
    out += k.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace skillscale::cli
