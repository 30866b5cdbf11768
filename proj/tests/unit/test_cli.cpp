#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "skillscale/error.hpp"

using namespace skillscale;
using namespace skillscale::cli;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "skillscale");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(args.size()), argv.data());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("skillscale_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("empty configuration yields the defaults") {
    CliConfig cfg = default_config();
    apply_config_text(cfg, "# nothing here\n\n", "empty.cfg");
    CHECK(cfg.width == 1000);
    CHECK(cfg.alpha == 0.6);
    CHECK(cfg.b2 == 1.0 / 22.0);
    CHECK_FALSE(cfg.weight_decay.has_value());
    CHECK(cfg.train_config().effective_weight_decay() == 0.0);
  }

  TEST_CASE("overrides apply in order") {
    const std::vector<std::string> overrides{"width=64", "optimizer=adam", "width=32"};
    const auto cfg = parse_config(std::nullopt, overrides);
    CHECK(cfg.width == 32);
    CHECK(cfg.optimizer == Optimizer::adam);
    CHECK(cfg.train_config().effective_weight_decay() == 5e-5);
    CHECK(cfg.train_config().width == 32);
  }

  TEST_CASE("errors name the key and the line") {
    CliConfig cfg = default_config();
    try {
      apply_config_text(cfg, "alpha=0.6\nwidth=-1\n", "run.cfg");
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("run.cfg:2") != std::string::npos);
      CHECK(msg.find("width") != std::string::npos);
    }
    try {
      apply_config_text(cfg, "\n\nwidht=5\n", "run.cfg");
      FAIL("expected an error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("run.cfg:3") != std::string::npos);
      CHECK(msg.find("widht") != std::string::npos);
    }
    CHECK_THROWS_AS(apply_override(cfg, "no_equals_sign"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "alpha=abc"), ConfigError);
  }

  TEST_CASE("text form round-trips") {
    auto cfg = default_config();
    apply_override(cfg, "lr=0.0123");
    apply_override(cfg, "weight_decay=0.001");
    apply_override(cfg, "data_mode=fixed");
    const auto text = to_text(cfg);
    auto back = default_config();
    apply_config_text(back, text, "round-trip");
    CHECK(to_text(back) == text);
    CHECK(back.lr == 0.0123);
    CHECK(back.data_mode == DataMode::fixed);
    std::size_t lines = 0;
    for (char c : text) lines += c == '\n';
    CHECK(lines == config_keys().size());
  }

  TEST_CASE("exit codes") {
    const auto dir = fresh_dir("codes");
    CHECK(run_cli({"-o", dir.string(), "distribution"}) == kExitOk);
    CHECK(fs::exists(dir / "distribution.csv"));
    CHECK(fs::exists(dir / "config.txt"));
    CHECK(run_cli({"-o", dir.string(), "no-such-command"}) == kExitUsage);
    CHECK(run_cli({"-o", dir.string(), "-s", "alpha=-1", "distribution"}) == kExitUsage);
    CHECK(run_cli({"-o", dir.string(), "theory"}) == kExitUsage);
    // Three points are too few for a power-law fit.
    std::ofstream(dir / "short.csv") << "resource,loss,law,alpha\n1,1,param,0.6\n2,0.5,param,0.6\n3,0.3,param,0.6\n";
    CHECK(run_cli({"-o", dir.string(), "fit", "--input", (dir / "short.csv").string()}) == kExitNumeric);
    fs::remove_all(dir);
  }

  TEST_CASE("outputs are byte-identical across runs") {
    const auto a = fresh_dir("a");
    const auto b = fresh_dir("b");
    for (const auto& dir : {a, b}) {
      REQUIRE(run_cli({"-o", dir.string(), "-s", "n_s=50", "theory", "--law", "time", "--points",
                       "20"}) == kExitOk);
      REQUIRE(run_cli({"-o", dir.string(), "-s", "n_s=3", "-s", "n_b=10", "-s", "width=8", "-s",
                       "batch=16", "-s", "steps=30", "-s", "measure_every=10", "-s",
                       "eval_samples=100", "train"}) == kExitOk);
    }
    for (const char* name : {"theory_time.csv", "prefactors.txt", "emergence.csv", "checkpoint.txt",
                             "task_spec.json"}) {
      CAPTURE(name);
      CHECK(fs::exists(a / name));
      CHECK(slurp(a / name) == slurp(b / name));
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }
}
