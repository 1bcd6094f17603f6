// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "vacbench/harness.hpp"

using namespace vacbench;
using namespace vacbench::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("vacbench_test_harness_" + std::to_string(::getpid())) /
                       name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

json small_config() {
  return {{"schema_version", 1},
          {"instance", {{"path", fixture("two_state_episodic.json")}}},
          {"agents", json::array({{{"kind", "vac"}},
                                  {{"kind", "eps_greedy"}, {"epsilon", 0.2}}})},
          {"solver", {{"outer_rounds", 2}, {"critic_steps", 10},
                      {"actor_steps", 10}}},
          {"T", 10},
          {"seeds", {3}}};
}

fs::path write_config(const fs::path& dir, const json& cfg) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << cfg.dump(2);
  return p;
}

int run(const fs::path& config, const fs::path& out, std::string* err_text = nullptr) {
  RunOptions opts;
  opts.config_path = config.string();
  opts.workers = 1;
  opts.out_dir = out.string();
  std::ostringstream log, err;
  const int rc = cmd_run(opts, log, err);
  if (err_text) *err_text = err.str();
  return rc;
}

// Minimal well-formedness check: balanced, properly nested elements.
bool well_formed_xml(const std::string& text) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while ((i = text.find('<', i)) != std::string::npos) {
    const std::size_t end = text.find('>', i);
    if (end == std::string::npos) return false;
    const std::string tag = text.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
    if (tag.back() == '/') continue;
    const std::size_t name_end = tag.find_first_of(" \t\n");
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
    } else {
      stack.push_back(tag.substr(0, name_end));
    }
  }
  return stack.empty();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t i = text.find(needle); i != std::string::npos;
       i = text.find(needle, i + 1)) {
    ++n;
  }
  return n;
}

struct EnvGuard {
  std::string name;
  explicit EnvGuard(std::string n, const std::string& value) : name(std::move(n)) {
    ::setenv(name.c_str(), value.c_str(), 1);
  }
  ~EnvGuard() { ::unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("run writes one log per cell, a summary and a chart") {
  const fs::path dir = scratch_dir("basic");
  const fs::path out = dir / "out";
  REQUIRE(run(write_config(dir, small_config()), out) == 0);

  std::vector<std::string> csvs;
  for (const auto& e : fs::directory_iterator(out)) {
    const std::string name = e.path().filename().string();
    if (e.path().extension() == ".csv" && name != "summary.csv") csvs.push_back(name);
  }
  std::sort(csvs.begin(), csvs.end());
  REQUIRE(csvs == std::vector<std::string>{"eps_greedy_seed3.csv", "vac_seed3.csv"});
  CHECK(fs::exists(out / "summary.csv"));
  CHECK(fs::exists(out / "regret.svg"));
  CHECK(fs::exists(out / "vac_seed3_params.json"));

  const auto rows = lines(slurp(out / "vac_seed3.csv"));
  REQUIRE(rows.size() == 11);
  CHECK(rows[0] == "t,v_star,v_pi,regret_inst,regret_cum,objective,loss,wall_ms");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].rfind(std::to_string(i) + ",", 0) == 0);
  }

  const json params = json::parse(slurp(out / "vac_seed3_params.json"));
  CHECK(params.contains("theta"));
  CHECK(params.contains("omega"));

  const auto summary = lines(slurp(out / "summary.csv"));
  CHECK(summary[0] == "agent,t,mean_regret_cum,std_regret_cum,seeds");
  // Checkpoints 1, 2, 5, 10 for both agents.
  CHECK(summary.size() == 1 + 2 * 4);
}

TEST_CASE("single agent, single seed: one log CSV with T rows") {
  const fs::path dir = scratch_dir("single");
  json cfg = small_config();
  cfg["agents"] = json::array({{{"kind", "vac"}}});
  REQUIRE(run(write_config(dir, cfg), dir / "out") == 0);
  std::vector<std::string> csvs, svgs;
  for (const auto& e : fs::directory_iterator(dir / "out")) {
    if (e.path().extension() == ".csv") csvs.push_back(e.path().filename().string());
    if (e.path().extension() == ".svg") svgs.push_back(e.path().filename().string());
  }
  std::sort(csvs.begin(), csvs.end());
  CHECK(csvs == std::vector<std::string>{"summary.csv", "vac_seed3.csv"});
  CHECK(svgs == std::vector<std::string>{"regret.svg"});
  CHECK(lines(slurp(dir / "out" / "vac_seed3.csv")).size() == 1 + 10);
}

TEST_CASE("reruns are byte-identical") {
  const fs::path dir = scratch_dir("rerun");
  const fs::path cfg = write_config(dir, small_config());
  REQUIRE(run(cfg, dir / "a") == 0);
  REQUIRE(run(cfg, dir / "b") == 0);
  for (const char* name : {"vac_seed3.csv", "eps_greedy_seed3.csv",
                           "summary.csv", "regret.svg",
                           "vac_seed3_params.json"}) {
    CHECK_MESSAGE(slurp(dir / "a" / name) == slurp(dir / "b" / name), name);
  }
}

TEST_CASE("worker count does not change the output") {
  const fs::path dir = scratch_dir("workers");
  json cfg = small_config();
  cfg["seeds"] = {1, 2, 3};
  const fs::path path = write_config(dir, cfg);
  REQUIRE(run(path, dir / "one") == 0);
  RunOptions opts;
  opts.config_path = path.string();
  opts.workers = 4;
  opts.out_dir = (dir / "four").string();
  std::ostringstream log, err;
  REQUIRE(cmd_run(opts, log, err) == 0);
  for (const auto& e : fs::directory_iterator(dir / "one")) {
    CHECK(slurp(e.path()) == slurp(dir / "four" / e.path().filename()));
  }
}

TEST_CASE("chart is well-formed with one polyline per agent and both axes") {
  const fs::path dir = scratch_dir("svg");
  json cfg = small_config();
  cfg["agents"].push_back({{"kind", "vanilla_ac"}, {"name", "vanilla"}});
  REQUIRE(run(write_config(dir, cfg), dir / "out") == 0);
  const std::string svg = slurp(dir / "out" / "regret.svg");
  CHECK(well_formed_xml(svg));
  CHECK(count(svg, "<polyline") == 3);
  CHECK(count(svg, "class=\"x-axis\"") == 1);
  CHECK(count(svg, "class=\"y-axis\"") == 1);
  CHECK(svg.find("data-agent=\"vanilla\"") != std::string::npos);
}

TEST_CASE("VACBENCH_SEED overrides the configured seeds") {
  const fs::path dir = scratch_dir("env");
  const fs::path cfg = write_config(dir, small_config());
  {
    EnvGuard env("VACBENCH_SEED", "11,12");
    REQUIRE(run(cfg, dir / "out") == 0);
  }
  CHECK(fs::exists(dir / "out" / "vac_seed11.csv"));
  CHECK(fs::exists(dir / "out" / "vac_seed12.csv"));
  CHECK_FALSE(fs::exists(dir / "out" / "vac_seed3.csv"));
  {
    EnvGuard env("VACBENCH_SEED", "1,x");
    std::string err;
    CHECK(run(cfg, dir / "bad", &err) == 2);
    CHECK(err.find("VACBENCH_SEED") != std::string::npos);
  }
  CHECK(parse_seed_list(" 7 ") == std::vector<std::uint64_t>{7});
  CHECK_THROWS_AS(parse_seed_list(""), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("1,,2"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("-1"), ConfigError);
}

TEST_CASE("config errors exit 2 and name the offending path") {
  const fs::path dir = scratch_dir("errors");
  struct Case {
    std::string pointer;
    json cfg;
  };
  std::vector<Case> cases;
  auto with = [](const std::string& ptr, json value) {
    json c = small_config();
    c[json::json_pointer(ptr)] = std::move(value);
    return c;
  };
  cases.push_back({"/schema_version", with("/schema_version", 2)});
  cases.push_back({"/T", with("/T", 0)});
  cases.push_back({"/T", with("/T", 2.5)});
  cases.push_back({"/seeds", with("/seeds", json::array())});
  cases.push_back({"/seeds/0", with("/seeds/0", -4)});
  cases.push_back({"/agents/0/kind", with("/agents/0/kind", "dqn")});
  cases.push_back({"/agents/1/epsilon", with("/agents/1/epsilon", 1.5)});
  cases.push_back({"/agents/0/alpha", with("/agents/0/alpha", "lots")});
  cases.push_back({"/agents/0/B", with("/agents/0/B", 0.0)});
  cases.push_back({"/agents/1", with("/agents/1/kind", "vac")});  // duplicate name
  cases.push_back({"/delta", with("/delta", 1.0)});
  cases.push_back({"/solver", with("/solver/outer_rounds", "x")});
  cases.push_back({"/instance/path", with("/instance/path", "missing.json")});
  cases.push_back({"/instance/kind",
                   with("/instance", {{"kind", "grid"}, {"horizon", 3}})});
  cases.push_back({"/instance/gamma",
                   with("/instance", {{"kind", "two_state"},
                                      {"mode", "discounted"},
                                      {"gamma", 1.0}})});
  json unknown = small_config();
  unknown["colour"] = "red";
  cases.push_back({"/colour", unknown});

  for (const auto& c : cases) {
    std::string err;
    CAPTURE(c.pointer);
    CHECK(run(write_config(dir, c.cfg), dir / "out", &err) == 2);
    CHECK(err.find(c.pointer) != std::string::npos);
  }
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(run(dir / "broken.json", dir / "out") == 2);
}

TEST_CASE("generated instances and relative fixture paths") {
  const fs::path dir = scratch_dir("generated");
  json cfg = small_config();
  cfg["instance"] = {{"kind", "random"}, {"num_states", 3}, {"num_actions", 2},
                     {"horizon", 2}, {"seed", 5}};
  cfg["T"] = 3;
  REQUIRE(run(write_config(dir, cfg), dir / "out") == 0);
  CHECK(lines(slurp(dir / "out" / "vac_seed3.csv")).size() == 4);

  fs::copy_file(fixture("two_state_discounted.json"), dir / "inst.json");
  cfg = small_config();
  cfg["instance"] = {{"path", "inst.json"}};
  cfg["T"] = 4;
  REQUIRE(run(write_config(dir, cfg), dir / "disc") == 0);
  const auto rows = lines(slurp(dir / "disc" / "vac_seed3.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] ==
        "t,v_star,v_pi,regret_inst,regret_cum,objective,loss,wall_ms,samples");
}

TEST_CASE("summary checkpoints follow the 1-2-5 ladder and end at T") {
  CHECK(summary_checkpoints(1) == std::vector<long>{1});
  CHECK(summary_checkpoints(10) == std::vector<long>{1, 2, 5, 10});
  CHECK(summary_checkpoints(30) == std::vector<long>{1, 2, 5, 10, 20, 30});
  CHECK(summary_checkpoints(2000) ==
        std::vector<long>{1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000});
}

TEST_CASE("summary statistics match a hand computation") {
  RegretLog a, b;
  a.agent = b.agent = "x";
  for (int t = 1; t <= 2; ++t) {
    RegretRow r{};
    r.t = t;
    r.regret_cum = t;
    a.rows.push_back(r);
    r.regret_cum = 3.0 * t;
    b.rows.push_back(r);
  }
  const auto rows = summarize({a, b}, {"x"}, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].t == 2);
  CHECK(rows[1].mean == 4.0);
  CHECK(rows[1].std == doctest::Approx(std::sqrt(8.0)));
  CHECK(rows[1].seeds == 2);
}

TEST_CASE("theory hyperparameters resolve unless overridden") {
  const auto lin = build_linear_from_tabular(two_state(2));
  AgentSpec spec;
  spec.kind = "vac";
  const Hyperparams theory = resolve_hyperparams(spec, lin, 100, 0.05);
  CHECK(theory.alpha > 0.0);
  CHECK(theory.B > 0.0);
  spec.alpha = 0.5;
  const Hyperparams mixed = resolve_hyperparams(spec, lin, 100, 0.05);
  CHECK(mixed.alpha == 0.5);
  CHECK(mixed.B == theory.B);
}

TEST_CASE("verify and solve commands") {
  const fs::path dir = scratch_dir("commands");
  std::ostringstream out, err;
  VerifyCommand v;
  v.out_dir = (dir / "verify").string();
  CHECK(cmd_verify(v, out, err) == 0);
  const json report = json::parse(slurp(dir / "verify" / "verify_report.json"));
  CHECK(report.size() == 5);
  CHECK(json::parse(out.str()) == report);

  v.flip_reparam_sign = true;
  std::ostringstream out2, err2;
  CHECK(cmd_verify(v, out2, err2) == 1);
  CHECK(err2.str().find("reparam_identity") != std::string::npos);

  SolveCommand s;
  s.instance_path = fixture("two_state_episodic.json");
  s.episodes = 20;
  s.out_dir = (dir / "solve").string();
  std::ostringstream out3, err3;
  REQUIRE(cmd_solve(s, out3, err3) == 0);
  const json summary = json::parse(out3.str());
  CHECK(summary["v_star"].get<double>() >= summary["v_pi"].get<double>() - 1e-12);
  CHECK(lines(slurp(dir / "solve" / "trace.csv"))[0] ==
        "round,phase,iteration,objective,loss");
  CHECK(json::parse(slurp(dir / "solve" / "params.json")).contains("omega"));

  s.instance_path = (dir / "nope.json").string();
  std::ostringstream out4, err4;
  CHECK(cmd_solve(s, out4, err4) == 3);
}

TEST_CASE("command-line binary: exit codes") {
  const char* cli = std::getenv("VACBENCH_CLI");
  if (cli == nullptr) {
    MESSAGE("VACBENCH_CLI not set; skipping");
    return;
  }
  const fs::path dir = scratch_dir("cli");
  auto status = [&](const std::string& args) {
    const std::string cmd = std::string(cli) + " " + args + " >" +
                            (dir / "stdout").string() + " 2>" +
                            (dir / "stderr").string();
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("--version") == 0);
  CHECK(status("verify") == 0);
  CHECK(status("verify --mutate reparam-sign") == 1);
  CHECK(status("run --config " + write_config(dir, small_config()).string() +
               " --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "summary.csv"));
  json bad = small_config();
  bad["T"] = -1;
  CHECK(status("run --config " + write_config(dir, bad).string()) == 2);
  CHECK(slurp(dir / "stderr").find("/T") != std::string::npos);
  CHECK(status("frobnicate") == 2);
  CHECK(status("run") == 2);
  CHECK(status("solve --instance " + fixture("two_state_episodic.json") +
               " --episodes 5") == 0);
}

TEST_CASE("shipped example configs are valid") {
  int configs = 0;
  for (const auto& e : fs::directory_iterator(VACBENCH_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    const json doc = json::parse(slurp(e.path()));
    CAPTURE(e.path().string());
    if (doc.contains("schema_version")) {
      const auto cfg = ExperimentConfig::load(e.path().string());
      CHECK_NOTHROW(build_instance(cfg));
      ++configs;
    } else {
      CHECK_NOTHROW(SolveConfig::from_json(doc));
    }
  }
  CHECK(configs >= 4);
}
