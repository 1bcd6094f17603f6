// Copyright 2026 The vacbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "vacbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "vacbench/linear_mdp.hpp"
#include "vacbench/objective.hpp"
#include "vacbench/verify.hpp"

namespace vacbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ----- config helpers -------------------------------------------------------

const json& member(const json& obj, const std::string& key,
                   const std::string& path) {
  if (!obj.contains(key)) {
    throw ConfigError(path + "/" + key, "required field is missing");
  }
  return obj.at(key);
}

void expect_object(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return key == k; });
    if (!known) throw ConfigError(path + "/" + key, "unknown field");
  }
}

long as_integer(const json& v, const std::string& path, long min_value) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  const long x = v.get<long>();
  if (x < min_value) {
    throw ConfigError(path, "must be >= " + std::to_string(min_value));
  }
  return x;
}

std::uint64_t as_seed(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) {
    return static_cast<std::uint64_t>(v.get<long long>());
  }
  throw ConfigError(path, "expected a non-negative integer seed");
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

// "theory" or a non-negative (alpha) / positive (B) number.
std::optional<double> theory_or_number(const json& obj, const std::string& key,
                                       const std::string& path, bool positive) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  const std::string where = path + "/" + key;
  if (v.is_string()) {
    if (v.get<std::string>() != "theory") {
      throw ConfigError(where, "expected a number or \"theory\"");
    }
    return std::nullopt;
  }
  const double x = as_number(v, where);
  if (positive ? !(x > 0.0) : !(x >= 0.0)) {
    throw ConfigError(where, positive ? "must be > 0" : "must be >= 0");
  }
  return x;
}

InstanceSpec parse_generated(const json& inst, const std::string& path,
                             std::uint64_t& seed) {
  reject_unknown(inst, path, {"kind", "mode", "num_states", "num_actions",
                              "horizon", "gamma", "seed"});
  InstanceSpec spec;
  spec.kind = as_string(member(inst, "kind", path), path + "/kind");
  if (spec.kind != "random" && spec.kind != "chain_lock" &&
      spec.kind != "two_state") {
    throw ConfigError(path + "/kind",
                      "expected random, chain_lock or two_state");
  }
  const std::string mode =
      inst.contains("mode") ? as_string(inst.at("mode"), path + "/mode")
                            : "episodic";
  if (mode == "episodic") {
    spec.mode = Mode::episodic;
    spec.horizon = static_cast<int>(
        as_integer(member(inst, "horizon", path), path + "/horizon", 1));
  } else if (mode == "discounted") {
    spec.mode = Mode::discounted;
    spec.gamma = as_number(member(inst, "gamma", path), path + "/gamma");
    if (!(spec.gamma >= 0.0 && spec.gamma < 1.0)) {
      throw ConfigError(path + "/gamma", "must lie in [0, 1)");
    }
  } else {
    throw ConfigError(path + "/mode", "expected episodic or discounted");
  }
  if (spec.kind == "random") {
    spec.num_states = static_cast<int>(
        as_integer(member(inst, "num_states", path), path + "/num_states", 1));
    spec.num_actions = static_cast<int>(as_integer(
        member(inst, "num_actions", path), path + "/num_actions", 1));
  } else if (spec.kind == "chain_lock") {
    spec.num_actions = static_cast<int>(as_integer(
        member(inst, "num_actions", path), path + "/num_actions", 2));
    if (spec.mode != Mode::episodic) {
      throw ConfigError(path + "/mode", "chain_lock is episodic only");
    }
  }
  seed = inst.contains("seed") ? as_seed(inst.at("seed"), path + "/seed") : 0;
  return spec;
}

}  // namespace

AgentSpec AgentSpec::from_json(const json& a, const std::string& path) {
  expect_object(a, path);
  reject_unknown(a, path, {"kind", "name", "alpha", "B", "epsilon"});
  AgentSpec spec;
  spec.kind = as_string(member(a, "kind", path), path + "/kind");
  if (spec.kind != "vac" && spec.kind != "vanilla_ac" &&
      spec.kind != "eps_greedy" && spec.kind != "mex") {
    throw ConfigError(path + "/kind",
                      "expected vac, vanilla_ac, eps_greedy or mex");
  }
  spec.label = a.contains("name") ? as_string(a.at("name"), path + "/name")
                                  : spec.kind;
  if (spec.label.empty() ||
      spec.label.find_first_of("/\\\"<>&") != std::string::npos) {
    throw ConfigError(path + "/name", "not usable as a file name");
  }
  spec.alpha = theory_or_number(a, "alpha", path, false);
  spec.B = theory_or_number(a, "B", path, true);
  if (a.contains("epsilon")) {
    spec.epsilon = as_number(a.at("epsilon"), path + "/epsilon");
    if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0)) {
      throw ConfigError(path + "/epsilon", "must lie in [0, 1]");
    }
  }
  return spec;
}

namespace {

std::string format_double(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
}

}  // namespace

// ----- config ---------------------------------------------------------------

ExperimentConfig ExperimentConfig::parse(const json& doc,
                                         const std::string& base_dir) {
  expect_object(doc, "");
  reject_unknown(doc, "", {"schema_version", "description", "instance",
                           "agents", "solver", "T", "seeds", "delta",
                           "output_dir", "record_wall_time"});
  const long version =
      as_integer(member(doc, "schema_version", ""), "/schema_version", 1);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("/schema_version",
                      "unsupported version " + std::to_string(version));
  }

  ExperimentConfig cfg;
  const json& inst = member(doc, "instance", "");
  expect_object(inst, "/instance");
  if (inst.contains("path")) {
    reject_unknown(inst, "/instance", {"path"});
    const fs::path p = as_string(inst.at("path"), "/instance/path");
    cfg.instance_path = (p.is_absolute() ? p : fs::path(base_dir) / p).string();
  } else {
    cfg.generated = parse_generated(inst, "/instance", cfg.instance_seed);
  }

  const json& agents = member(doc, "agents", "");
  if (!agents.is_array() || agents.empty()) {
    throw ConfigError("/agents", "expected a non-empty array");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = "/agents/" + std::to_string(i);
    cfg.agents.push_back(AgentSpec::from_json(agents[i], path));
    if (!labels.insert(cfg.agents.back().label).second) {
      throw ConfigError(path, "duplicate agent name '" +
                                  cfg.agents.back().label + "'");
    }
  }

  if (doc.contains("solver")) {
    const json& solver = doc.at("solver");
    expect_object(solver, "/solver");
    try {
      cfg.solver = SolveConfig::from_json(solver);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("/solver", e.what());
    } catch (const Error& e) {
      throw ConfigError("/solver", e.what());
    }
  }

  cfg.T = as_integer(member(doc, "T", ""), "/T", 1);
  const json& seeds = member(doc, "seeds", "");
  if (!seeds.is_array() || seeds.empty()) {
    throw ConfigError("/seeds", "expected a non-empty array");
  }
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    cfg.seeds.push_back(as_seed(seeds[i], "/seeds/" + std::to_string(i)));
  }
  if (doc.contains("delta")) {
    cfg.delta = as_number(doc.at("delta"), "/delta");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
      throw ConfigError("/delta", "must lie in (0, 1)");
    }
  }
  if (doc.contains("output_dir")) {
    cfg.output_dir = as_string(doc.at("output_dir"), "/output_dir");
  }
  if (doc.contains("record_wall_time")) {
    if (!doc.at("record_wall_time").is_boolean()) {
      throw ConfigError("/record_wall_time", "expected a boolean");
    }
    cfg.record_wall_time = doc.at("record_wall_time").get<bool>();
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config " + path);
  json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse(doc, fs::path(path).parent_path().string().empty()
                        ? "."
                        : fs::path(path).parent_path().string());
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    const auto last = token.find_last_not_of(" \t");
    if (first == std::string::npos) {
      throw ConfigError("$VACBENCH_SEED", "empty seed in '" + text + "'");
    }
    token = token.substr(first, last - first + 1);
    if (token.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("$VACBENCH_SEED", "invalid seed '" + token + "'");
    }
    try {
      seeds.push_back(std::stoull(token));
    } catch (const std::exception&) {
      throw ConfigError("$VACBENCH_SEED", "seed out of range '" + token + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("$VACBENCH_SEED", "no seeds given");
  return seeds;
}

TabularCore build_instance(const ExperimentConfig& cfg) {
  try {
    if (cfg.generated) return make_instance(*cfg.generated, cfg.instance_seed);
    return TabularCore::load(cfg.instance_path);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(cfg.generated ? "/instance" : "/instance/path", e.what());
  }
}

Hyperparams resolve_hyperparams(const AgentSpec& agent, const LinearMdp& lin,
                                long T, double delta) {
  Hyperparams hp{0.0, 1.0};
  if (!agent.alpha || !agent.B) {
    const auto& core = lin.core();
    hp = core.is_episodic()
             ? hyperparams_from_theory(T, core.horizon(), core.num_actions(),
                                       lin.dim(), delta)
             : hyperparams_from_theory_discounted(
                   T, core.gamma(), core.num_actions(), lin.dim(), delta);
  }
  if (agent.alpha) hp.alpha = *agent.alpha;
  if (agent.B) hp.B = *agent.B;
  return hp;
}

RegretLog run_agent(const AgentSpec& agent, const LinearMdp& lin, long T,
                    double delta, const AgentOptions& opts,
                    std::uint64_t seed) {
  RegretLog log;
  if (agent.kind == "eps_greedy") {
    BaselineParams params;
    params.epsilon = agent.epsilon;
    log = run_baseline(BaselineKind::eps_greedy, lin, T, params, opts, seed);
  } else {
    const Hyperparams hp = resolve_hyperparams(agent, lin, T, delta);
    if (agent.kind == "vac") {
      log = lin.core().is_episodic()
                ? run_vac_episodic(lin, T, hp.alpha, hp.B, opts, seed)
                : run_vac_discounted(lin, T, hp.alpha, hp.B, opts, seed);
    } else {
      BaselineParams params;
      params.alpha = hp.alpha;
      params.B = hp.B;
      log = run_baseline(parse_baseline(agent.kind), lin, T, params, opts,
                         seed);
    }
  }
  log.agent = agent.label;
  return log;
}

// ----- summaries ------------------------------------------------------------

std::vector<long> summary_checkpoints(long T) {
  std::vector<long> out;
  for (long decade = 1; decade <= T; decade *= 10) {
    for (long m : {1L, 2L, 5L}) {
      if (m * decade <= T) out.push_back(m * decade);
    }
    if (decade > T / 10) break;
  }
  if (out.empty() || out.back() != T) out.push_back(T);
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<RegretLog>& logs,
                                  const std::vector<std::string>& agent_order,
                                  long T) {
  std::vector<SummaryRow> rows;
  for (const auto& agent : agent_order) {
    std::vector<const RegretLog*> mine;
    for (const auto& log : logs) {
      if (log.agent == agent && static_cast<long>(log.rows.size()) >= T) {
        mine.push_back(&log);
      }
    }
    if (mine.empty()) continue;
    for (long t : summary_checkpoints(T)) {
      double sum = 0.0;
      for (const auto* log : mine) sum += log->rows[t - 1].regret_cum;
      const double n = static_cast<double>(mine.size());
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto* log : mine) {
        const double d = log->rows[t - 1].regret_cum - mean;
        ss += d * d;
      }
      const double sd = mine.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      rows.push_back({agent, t, mean, sd, static_cast<int>(mine.size())});
    }
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "agent,t,mean_regret_cum,std_regret_cum,seeds\n";
  for (const auto& r : rows) {
    out << r.agent << ',' << r.t << ',' << format_double(r.mean, 17) << ','
        << format_double(r.std, 17) << ',' << r.seeds << '\n';
  }
}

void write_regret_svg(std::ostream& out, const std::vector<RegretLog>& logs,
                      const std::vector<std::string>& agent_order) {
  constexpr double kWidth = 800, kHeight = 500;
  constexpr double kLeft = 70, kRight = 160, kTop = 30, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  struct Series {
    std::string agent;
    std::vector<double> mean;
  };
  std::vector<Series> series;
  long t_max = 1;
  double y_max = 0.0;
  for (const auto& agent : agent_order) {
    std::vector<const RegretLog*> mine;
    std::size_t len = 0;
    for (const auto& log : logs) {
      if (log.agent != agent || log.rows.empty()) continue;
      len = len == 0 ? log.rows.size() : std::min(len, log.rows.size());
      mine.push_back(&log);
    }
    if (mine.empty()) continue;
    Series s{agent, std::vector<double>(len, 0.0)};
    for (const auto* log : mine) {
      for (std::size_t i = 0; i < len; ++i) s.mean[i] += log->rows[i].regret_cum;
    }
    for (double& v : s.mean) {
      v /= static_cast<double>(mine.size());
      y_max = std::max(y_max, v);
    }
    t_max = std::max<long>(t_max, static_cast<long>(len));
    series.push_back(std::move(s));
  }
  if (!(y_max > 0.0)) y_max = 1.0;

  auto px = [&](double t) {
    return kLeft + (t_max > 1 ? (t - 1.0) / (t_max - 1.0) : 0.5) * plot_w;
  };
  auto py = [&](double y) { return kTop + plot_h * (1.0 - y / y_max); };
  auto num = [](double x) { return format_double(std::round(x * 100) / 100, 8); };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<title>Mean cumulative regret</title>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<g class=\"axes\" stroke=\"black\">\n"
      << "<line class=\"x-axis\" x1=\"" << kLeft << "\" y1=\""
      << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\"/>\n"
      << "<line class=\"y-axis\" x1=\"" << kLeft << "\" y1=\"" << kTop
      << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h << "\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = y_max * i / 4.0;
    const double tv = 1.0 + (t_max - 1.0) * i / 4.0;
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(py(yv)) << "\" x2=\""
        << kLeft << "\" y2=\"" << num(py(yv)) << "\"/>\n"
        << "<text stroke=\"none\" text-anchor=\"end\" x=\"" << kLeft - 8
        << "\" y=\"" << num(py(yv) + 4) << "\">" << format_double(yv, 4)
        << "</text>\n"
        << "<line x1=\"" << num(px(tv)) << "\" y1=\"" << kTop + plot_h
        << "\" x2=\"" << num(px(tv)) << "\" y2=\"" << kTop + plot_h + 5
        << "\"/>\n"
        << "<text stroke=\"none\" text-anchor=\"middle\" x=\"" << num(px(tv))
        << "\" y=\"" << kTop + plot_h + 20 << "\">"
        << static_cast<long>(std::lround(tv)) << "</text>\n";
  }
  out << "<text stroke=\"none\" text-anchor=\"middle\" x=\""
      << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\">episode t</text>\n"
      << "<text stroke=\"none\" text-anchor=\"middle\" transform=\"translate(18,"
      << kTop + plot_h / 2 << ") rotate(-90)\">mean cumulative regret</text>\n"
      << "</g>\n<g class=\"series\" fill=\"none\" stroke-width=\"1.5\">\n";

  constexpr std::size_t kMaxPoints = 500;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::size_t stride = std::max<std::size_t>(1, s.mean.size() / kMaxPoints);
    out << "<polyline data-agent=\"" << xml_escape(s.agent) << "\" stroke=\""
        << kColors[k % 8] << "\" points=\"";
    for (std::size_t i = 0; i < s.mean.size(); i += stride) {
      out << num(px(static_cast<double>(i + 1))) << ',' << num(py(s.mean[i]))
          << ' ';
    }
    out << num(px(static_cast<double>(s.mean.size()))) << ','
        << num(py(s.mean.back())) << "\"/>\n";
  }
  out << "</g>\n<g class=\"legend\">\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(k);
    out << "<line x1=\"" << kLeft + plot_w + 15 << "\" y1=\"" << y
        << "\" x2=\"" << kLeft + plot_w + 40 << "\" y2=\"" << y
        << "\" stroke=\"" << kColors[k % 8] << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kLeft + plot_w + 45 << "\" y=\"" << y + 4 << "\">"
        << xml_escape(series[k].agent) << "</text>\n";
  }
  out << "</g>\n</svg>\n";
}

json checkpoint_json(const QFunction& f, const LogLinearPolicy& pi) {
  return {{"theta", params_to_json(f.theta)},
          {"omega", params_to_json(pi.omega)}};
}

// ----- commands -------------------------------------------------------------

int cmd_run(const RunOptions& opts, std::ostream& log, std::ostream& err) {
  ExperimentConfig cfg;
  std::optional<LinearMdp> lin;
  std::vector<Hyperparams> resolved;
  try {
    cfg = ExperimentConfig::load(opts.config_path);
    if (const char* env = std::getenv("VACBENCH_SEED"); env && *env) {
      cfg.seeds = parse_seed_list(env);
    }
    lin.emplace(build_linear_from_tabular(build_instance(cfg)));
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
      try {
        if (cfg.agents[i].kind != "eps_greedy") {
          resolve_hyperparams(cfg.agents[i], *lin, cfg.T, cfg.delta);
        }
      } catch (const Error& e) {
        throw ConfigError("/agents/" + std::to_string(i), e.what());
      }
    }
    if (opts.workers < 0) throw ConfigError("--workers", "must be >= 0");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  }

  const fs::path out_dir = opts.out_dir.empty() ? cfg.output_dir : opts.out_dir;
  try {
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    err << "error: cannot create " << out_dir << ": " << e.what() << '\n';
    return 3;
  }

  struct Cell {
    const AgentSpec* agent;
    std::uint64_t seed;
    RegretLog log;
    std::string error;
    bool done = false;
  };
  std::vector<Cell> cells;
  for (const auto& agent : cfg.agents) {
    for (auto seed : cfg.seeds) cells.push_back({&agent, seed, {}, {}, false});
  }

  AgentOptions agent_opts;
  agent_opts.solver = cfg.solver;
  agent_opts.record_wall_time = cfg.record_wall_time;

  std::mutex io;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      Cell& cell = cells[i];
      const std::string stem =
          cell.agent->label + "_seed" + std::to_string(cell.seed);
      try {
        try {
          cell.log = run_agent(*cell.agent, *lin, cfg.T, cfg.delta, agent_opts,
                               cell.seed);
          cell.done = true;
        } catch (const AgentError& e) {
          cell.log = e.partial();
          cell.log.agent = cell.agent->label;
          cell.error = e.what();
        }
        std::ostringstream csv;
        cell.log.write_csv(csv);
        write_file(out_dir / (stem + ".csv"), csv.str());
        if (cell.done) {
          write_file(out_dir / (stem + "_params.json"),
                     checkpoint_json(cell.log.final_f, cell.log.final_pi)
                             .dump(2) +
                         "\n");
        }
      } catch (const std::exception& e) {
        cell.done = false;
        if (cell.error.empty()) cell.error = e.what();
      }
      std::lock_guard lock(io);
      if (cell.done) {
        log << stem << ": regret " << format_double(cell.log.cumulative_regret(), 6)
            << " over " << cell.log.rows.size() << " rounds\n";
      } else {
        err << stem << ": failed: " << cell.error << '\n';
      }
    }
  };

  unsigned n_workers = opts.workers > 0
                           ? static_cast<unsigned>(opts.workers)
                           : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(cells.size()));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  bool failed = false;
  std::vector<RegretLog> logs;
  for (auto& cell : cells) {
    if (cell.done) logs.push_back(std::move(cell.log));
    failed = failed || !cell.done;
  }
  std::vector<std::string> order;
  for (const auto& agent : cfg.agents) order.push_back(agent.label);
  try {
    std::ostringstream summary;
    write_summary_csv(summary, summarize(logs, order, cfg.T));
    write_file(out_dir / "summary.csv", summary.str());
    std::ostringstream svg;
    write_regret_svg(svg, logs, order);
    write_file(out_dir / "regret.svg", svg.str());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  log << "wrote " << cells.size() << " run logs, summary.csv and regret.svg to "
      << out_dir.string() << '\n';
  return failed ? 3 : 0;
}

int cmd_verify(const VerifyCommand& opts, std::ostream& out,
               std::ostream& err) {
  std::vector<CheckResult> results;
  try {
    results = run_verify_suite({opts.seed, opts.flip_reparam_sign});
  } catch (const std::exception& e) {
    err << "verify error: " << e.what() << '\n';
    return 1;
  }
  const json report = verify_report(results);
  out << report.dump(2) << '\n';
  if (!opts.out_dir.empty()) {
    try {
      fs::create_directories(opts.out_dir);
      write_file(fs::path(opts.out_dir) / "verify_report.json",
                 report.dump(2) + "\n");
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
  }
  bool ok = true;
  for (const auto& r : results) {
    if (!r.pass) {
      err << "FAILED: " << r.name << " (maxError " << r.max_error << ")\n";
      ok = false;
    }
  }
  return ok ? 0 : 1;
}

int cmd_solve(const SolveCommand& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.episodes < 0) throw invalid_argument("--episodes must be >= 0");
    const LinearMdp lin =
        build_linear_from_tabular(TabularCore::load(opts.instance_path));
    const TabularCore& core = lin.core();
    SolveConfig cfg;
    if (!opts.solver_path.empty()) {
      std::ifstream in(opts.solver_path);
      if (!in) throw Error(ErrorKind::io, "cannot open " + opts.solver_path);
      cfg = SolveConfig::from_json(json::parse(in));
    }

    const PolicyTable uniform = PolicyTable::uniform(core);
    TransitionDataset data(lin.num_steps());
    for (long e = 0; e < opts.episodes; ++e) {
      Rng rng = Rng::stream(opts.seed, static_cast<std::uint64_t>(e));
      if (core.is_episodic()) {
        data.add_trajectory(rollout(core, uniform, rng), e);
      } else {
        const auto s = sample_discounted(core, uniform, rng);
        data.add(0, {s.state, s.action, core.reward(0, s.state, s.action),
                     s.next_state},
                 e);
      }
    }
    const ObjectiveEngine engine(lin, data, cfg.ridge);
    const SolveResult res =
        solve_round(engine, opts.alpha, opts.B, QFunction::optimistic(lin),
                    LogLinearPolicy::zeros(lin), cfg);
    const PolicyTable table = policy_table(res.pi, lin);
    const json summary = {
        {"objective", res.objective},
        {"loss", res.loss},
        {"v_pi", exact_policy_values(core, table).at_rho(core.rho())},
        {"v_star", exact_optimal_values(core).values.at_rho(core.rho())},
        {"trace_rows", res.trace.size()},
        {"alpha", opts.alpha},
        {"B", opts.B},
        {"episodes", opts.episodes}};
    out << summary.dump(2) << '\n';
    if (!opts.out_dir.empty()) {
      fs::create_directories(opts.out_dir);
      write_file(fs::path(opts.out_dir) / "params.json",
                 checkpoint_json(res.f, res.pi).dump(2) + "\n");
      std::ostringstream trace;
      write_trace_csv(trace, res.trace);
      write_file(fs::path(opts.out_dir) / "trace.csv", trace.str());
    }
    return 0;
  } catch (const std::exception& e) {
    err << "solve error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace vacbench
