// mfgelim: command-line driver for the mean-field elimination library.
//
// Configuration is layered: built-in defaults, then --preset, then --config FILE,
// then explicit flags. Every run writes manifest.json next to its artifacts.

#include "mfg/bridge.hpp"
#include "mfg/class_io.hpp"
#include "mfg/elimination.hpp"
#include "mfg/environments.hpp"
#include "mfg/multitype.hpp"
#include "mfg/ne_solver.hpp"
#include "mfg/parallel.hpp"
#include "mfg/pmbed.hpp"
#include "mfg/sampler.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#ifndef MFG_VERSION
#define MFG_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- logging ----

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
  static const Level level = [] {
    const char* env = std::getenv("MFG_ELIM_LOG");
    const std::string v = env ? env : "info";
    if (v == "error") return Level::Error;
    if (v == "warn") return Level::Warn;
    if (v == "debug") return Level::Debug;
    return Level::Info;
  }();
  return level;
}

void log(Level level, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (level <= log_level()) std::cerr << "[mfgelim " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

/// Non-convergence, all-eliminated and similar outcomes that still produce artifacts.
struct ReportedFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- configuration ----

json default_config() {
  return {{"kind", "tabular"},   {"H", 2},          {"S", 3},           {"A", 2},
          {"K", 10},             {"W", 2},          {"d_phi", 5},       {"d_psi", 5},
          {"beta_max", 0.1},     {"sensitivity", 0.5}, {"logit_scale", 2.0},
          {"alpha", 0.02},       {"tol", 5e-4},     {"max_iter", 5000}, {"eps", 1e-3},
          {"eps0", 0.0},         {"eps_tilde", 0.0}, {"delta", 0.001},  {"T", 50},
          {"bar_eps", 1.0},      {"mode", "ne-set"}, {"class", ""},     {"ne_table", ""},
          {"ref_model", -1},     {"policy_samples", 4}, {"hard_d", 3}, {"hard_eps", 0.04},
          {"hard_lipschitz", 1.0}, {"hard_zeta", 0}, {"hard_models", 20}, {"episodes", 200},
          {"populations", {10, 10}}, {"seed", 0}, {"sampler_seed", -1}, {"threads", 1}};
}

json preset(const std::string& name) {
  if (name.empty()) return json::object();
  if (name == "appxJ") {
    return {{"kind", "linear"}, {"H", 3},      {"S", 100},     {"A", 50},  {"d_phi", 5},
            {"d_psi", 5},       {"K", 200},    {"alpha", 0.02}, {"tol", 5e-4}, {"eps", 1e-3},
            {"T", 50},          {"delta", 0.001}, {"beta_max", 0.1}};
  }
  if (name == "toy") {
    return {{"kind", "tabular"}, {"H", 2}, {"S", 2}, {"A", 2}, {"K", 6}, {"bar_eps", 1.0},
            {"mode", "full"},    {"eps", 0.05}};
  }
  throw mfg::ConfigError("unknown preset '" + name + "' (known: appxJ, toy)");
}

struct RunConfig {
  json raw;
  std::string kind;
  int H, S, A, K, W, d_phi, d_psi;
  double beta_max, sensitivity, logit_scale;
  mfg::NESolveConfig ne;
  double eps, eps0, eps_tilde, delta, bar_eps;
  int T;
  mfg::CandidateMode mode;
  std::string class_path, ne_table_path;
  int ref_model, policy_samples;
  int hard_d, hard_zeta, hard_models;
  double hard_eps, hard_lipschitz;
  int episodes;
  std::vector<int> populations;
  std::uint64_t seed, sampler_seed;
  int threads;
};

RunConfig parse_config(const json& j) {
  RunConfig c;
  try {
    c.raw = j;
    c.kind = j.at("kind").get<std::string>();
    c.H = j.at("H").get<int>();
    c.S = j.at("S").get<int>();
    c.A = j.at("A").get<int>();
    c.K = j.at("K").get<int>();
    c.W = j.at("W").get<int>();
    c.d_phi = j.at("d_phi").get<int>();
    c.d_psi = j.at("d_psi").get<int>();
    c.beta_max = j.at("beta_max").get<double>();
    c.sensitivity = j.at("sensitivity").get<double>();
    c.logit_scale = j.at("logit_scale").get<double>();
    c.ne.alpha = j.at("alpha").get<double>();
    c.ne.tol = j.at("tol").get<double>();
    c.ne.max_iter = j.at("max_iter").get<int>();
    c.eps = j.at("eps").get<double>();
    c.eps0 = j.at("eps0").get<double>();
    c.eps_tilde = j.at("eps_tilde").get<double>();
    c.delta = j.at("delta").get<double>();
    c.T = j.at("T").get<int>();
    c.bar_eps = j.at("bar_eps").get<double>();
    c.mode = mfg::candidate_mode_from_string(j.at("mode").get<std::string>());
    c.class_path = j.at("class").get<std::string>();
    c.ne_table_path = j.at("ne_table").get<std::string>();
    c.ref_model = j.at("ref_model").get<int>();
    c.policy_samples = j.at("policy_samples").get<int>();
    c.hard_d = j.at("hard_d").get<int>();
    c.hard_eps = j.at("hard_eps").get<double>();
    c.hard_lipschitz = j.at("hard_lipschitz").get<double>();
    c.hard_zeta = j.at("hard_zeta").get<int>();
    c.hard_models = j.at("hard_models").get<int>();
    c.episodes = j.at("episodes").get<int>();
    c.populations = j.at("populations").get<std::vector<int>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const long long ss = j.at("sampler_seed").get<long long>();
    c.sampler_seed = ss < 0 ? mfg::Rng::mix(c.seed ^ 0x5eedULL) : static_cast<std::uint64_t>(ss);
    c.threads = j.at("threads").get<int>();
  } catch (const json::exception& e) {
    throw mfg::ConfigError(std::string("bad configuration value: ") + e.what());
  }
  if (c.H < 1 || c.S < 1 || c.A < 1 || c.K < 1 || c.W < 1) throw mfg::ConfigError("H, S, A, K, W must be positive");
  if (!(c.ne.alpha > 0.0 && c.ne.alpha <= 1.0)) throw mfg::ConfigError("alpha must lie in (0, 1]");
  if (!(c.ne.tol > 0.0) || c.ne.max_iter < 1) throw mfg::ConfigError("tol and max_iter must be positive");
  if (!(c.eps > 0.0)) throw mfg::ConfigError("eps must be positive");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw mfg::ConfigError("delta must lie in (0, 1)");
  if (c.T < 1) throw mfg::ConfigError("T must be positive");
  if (c.threads < 1) throw mfg::ConfigError("threads must be positive");
  if (c.episodes < 1) throw mfg::ConfigError("episodes must be positive");
  return c;
}

// ---- shared steps ----

mfg::ModelClass generate_class(const RunConfig& c) {
  if (c.kind == "linear") {
    mfg::LinearSpec spec;
    spec.horizon = c.H;
    spec.states = c.S;
    spec.actions = c.A;
    spec.dim_phi = c.d_phi;
    spec.dim_psi = c.d_psi;
    spec.models = c.K;
    spec.beta_max = c.beta_max;
    spec.seed = c.seed;
    return mfg::gen_linear_class(spec);
  }
  if (c.kind == "tabular") {
    mfg::TabularSpec spec;
    spec.horizon = c.H;
    spec.states = c.S;
    spec.actions = c.A;
    spec.models = c.K;
    spec.density_sensitivity = c.sensitivity;
    spec.logit_scale = c.logit_scale;
    spec.seed = c.seed;
    return mfg::gen_tabular_class(spec);
  }
  if (c.kind == "hard") {
    mfg::HardInstanceSpec spec;
    spec.d = c.hard_d;
    spec.eps = c.hard_eps;
    spec.lipschitz_t = c.hard_lipschitz;
    spec.zeta = c.hard_zeta;
    spec.models = c.hard_models;
    return mfg::gen_hard_instance(spec);
  }
  throw mfg::ConfigError("unknown class kind '" + c.kind + "' (known: linear, tabular, hard)");
}

mfg::ModelClass obtain_class(const RunConfig& c) {
  if (!c.class_path.empty()) {
    log(Level::Info, "loading class from " + c.class_path);
    return mfg::load_class(c.class_path);
  }
  log(Level::Info, "generating " + c.kind + " class (seed " + std::to_string(c.seed) + ")");
  return generate_class(c);
}

std::vector<mfg::NESolveReport> obtain_ne_table(const RunConfig& c, const mfg::ModelClass& models) {
  if (!c.ne_table_path.empty()) {
    const auto table = mfg::ne_table_from_json(mfg::load_json(c.ne_table_path));
    if (static_cast<int>(table.size()) != models.size()) {
      throw mfg::ConfigError("NE table size does not match the class");
    }
    return table;
  }
  log(Level::Info, "solving NE for " + std::to_string(models.size()) + " models");
  return mfg::ne_policy_table(models, c.ne);
}

mfg::ElimConfig elim_config(const RunConfig& c, const mfg::ModelClass& models) {
  mfg::ElimConfig cfg =
      mfg::ElimConfig::defaults(c.eps, models.lipschitz().reward, models.shape().horizon, c.delta, c.T);
  if (c.eps0 > 0.0) {
    cfg.eps0 = c.eps0;
    cfg.eps_tilde = cfg.eps0 / 6.0;
  }
  if (c.eps_tilde > 0.0) cfg.eps_tilde = c.eps_tilde;
  cfg.mode = c.mode;
  cfg.validate();
  return cfg;
}

mfg::ModelPtr true_model_ptr(const mfg::ModelClass& models) {
  if (!models.true_index()) throw mfg::ConfigError("class has no designated true model");
  return models.ptr(*models.true_index());
}

void write_trace(const mfg::ElimTrace& trace, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw mfg::ConfigError("cannot write " + path.string());
  trace.write_csv(out);
}

json policy_to_json(const mfg::Policy& p) {
  json steps = json::array();
  for (int h = 0; h < p.horizon(); ++h) steps.push_back(mfg::matrix_to_json(p.step(h)));
  return steps;
}

struct Context {
  RunConfig cfg;
  fs::path out;
  json artifacts = json::array();
  json summary = json::object();

  fs::path artifact(const std::string& name) {
    artifacts.push_back(name);
    return out / name;
  }
};

// ---- subcommands ----

void cmd_gen_env(Context& ctx) {
  const mfg::ModelClass models = generate_class(ctx.cfg);
  mfg::save_class(models, ctx.artifact("class.mfgclass.json").string());
  ctx.summary["size"] = models.size();
  ctx.summary["true_index"] = models.true_index().value_or(-1);
  ctx.summary["lipschitz"] = {{"transition", models.lipschitz().transition},
                              {"reward", models.lipschitz().reward}};
}

void cmd_solve_ne(Context& ctx) {
  const mfg::ModelClass models = obtain_class(ctx.cfg);
  const auto table = mfg::ne_policy_table(models, ctx.cfg.ne);
  mfg::save_json(mfg::ne_table_to_json(table), ctx.artifact("ne_table.json").string());
  int failed = 0;
  double worst = 0.0;
  for (const auto& r : table) {
    if (!r.converged) ++failed;
    worst = std::max(worst, r.gap);
  }
  ctx.summary["models"] = models.size();
  ctx.summary["not_converged"] = failed;
  ctx.summary["worst_gap"] = worst;
  if (failed > 0) throw ReportedFailure(std::to_string(failed) + " NE solves did not reach the tolerance");
}

void cmd_run_elim(Context& ctx) {
  const mfg::ModelClass models = obtain_class(ctx.cfg);
  const mfg::ElimConfig cfg = elim_config(ctx.cfg, models);
  mfg::SamplerState sampler(true_model_ptr(models), ctx.cfg.sampler_seed);
  mfg::Policy ref = mfg::Policy::uniform(models.shape());
  std::vector<mfg::Policy> candidates{ref};
  if (ctx.cfg.ref_model >= 0 || cfg.mode == mfg::CandidateMode::NeSet) {
    const auto table = obtain_ne_table(ctx.cfg, models);
    if (ctx.cfg.ref_model >= models.size()) throw mfg::ConfigError("ref_model out of range");
    if (ctx.cfg.ref_model >= 0) ref = table[ctx.cfg.ref_model].policy;
    candidates.clear();
    for (const auto& r : table) candidates.push_back(r.policy);
    candidates.push_back(ref);
  } else if (cfg.mode == mfg::CandidateMode::EpsCover) {
    const mfg::PolicyCover cover(ctx.cfg.bar_eps, models.shape());
    candidates.clear();
    for (std::uint64_t k = 0; k < cover.size(); ++k) candidates.push_back(cover.member(k));
    candidates.push_back(ref);
  }
  mfg::ElimTrace trace;
  mfg::ElimRecord stamp;
  stamp.branch = "if";
  stamp.ref_model = ctx.cfg.ref_model;
  const auto outcome = mfg::model_elim(ref, models, mfg::all_indices(models.size()), cfg, sampler, candidates,
                                       models.size(), &trace, stamp);
  write_trace(trace, ctx.artifact("trace.csv"));
  ctx.summary["survivors"] = outcome.survivors;
  ctx.summary["iterations"] = outcome.iterations;
  ctx.summary["stopped_by_threshold"] = outcome.stopped_by_threshold;
  ctx.summary["trajectories"] = outcome.trajectories_used;
  if (models.true_index()) {
    const int t = *models.true_index();
    ctx.summary["true_model_survived"] =
        std::find(outcome.survivors.begin(), outcome.survivors.end(), t) != outcome.survivors.end();
  }
}

void finish_mebp(Context& ctx, const mfg::ModelClass& models, const mfg::MebpResult& result) {
  write_trace(result.trace, ctx.artifact("trace.csv"));
  json r = {{"success", result.success},
            {"returned_model", result.returned_model},
            {"rounds", result.rounds},
            {"survivors", result.survivors},
            {"trajectories", result.trajectories},
            {"failure", result.failure}};
  if (result.success) {
    r["policy"] = policy_to_json(result.policy);
    r["true_ne_gap"] = mfg::ne_gap(models.true_model(), result.policy);
    if (models.true_index()) {
      const int t = *models.true_index();
      r["true_model_survived"] =
          std::find(result.survivors.begin(), result.survivors.end(), t) != result.survivors.end();
    }
  }
  mfg::save_json(r, ctx.artifact("result.json").string());
  r.erase("policy");
  ctx.summary = r;
  if (!result.success) throw ReportedFailure("elimination failed: " + result.failure);
}

void cmd_run_mebp(Context& ctx) {
  const mfg::ModelClass models = obtain_class(ctx.cfg);
  const auto table = obtain_ne_table(ctx.cfg, models);
  if (ctx.cfg.ne_table_path.empty()) {
    mfg::save_json(mfg::ne_table_to_json(table), ctx.artifact("ne_table.json").string());
  }
  const mfg::ElimConfig cfg = elim_config(ctx.cfg, models);
  mfg::SamplerState sampler(true_model_ptr(models), ctx.cfg.sampler_seed);
  log(Level::Info, "running elimination: eps0=" + std::to_string(cfg.eps0) + " T=" + std::to_string(cfg.T));
  finish_mebp(ctx, models, mfg::mebp_heuristic(models, cfg, sampler, table));
}

void cmd_run_mebp_exact(Context& ctx) {
  const mfg::ModelClass models = obtain_class(ctx.cfg);
  mfg::ElimConfig cfg = elim_config(ctx.cfg, models);
  if (cfg.mode == mfg::CandidateMode::NeSet) cfg.mode = mfg::CandidateMode::Full;
  mfg::SamplerState sampler(true_model_ptr(models), ctx.cfg.sampler_seed);
  finish_mebp(ctx, models,
              mfg::mebp_exact(models, cfg, ctx.cfg.bar_eps, ctx.cfg.eps, sampler, ctx.cfg.ne, ctx.cfg.seed));
}

void cmd_estimate_pmbed(Context& ctx) {
  const mfg::ModelClass models = obtain_class(ctx.cfg);
  std::optional<std::vector<mfg::Policy>> ne;
  if (!ctx.cfg.ne_table_path.empty()) {
    ne.emplace();
    for (const auto& r : obtain_ne_table(ctx.cfg, models)) ne->push_back(r.policy);
  }
  const auto est = mfg::pmbed_estimate(models, ctx.cfg.eps, ctx.cfg.policy_samples, ctx.cfg.seed, ctx.cfg.ne, ne);
  const int bound = models.shape().states * models.shape().actions;
  json r = {{"estimate", est.estimate},
            {"best_h", est.best_h},
            {"best_policy", est.best_policy},
            {"policies_tried", est.policies_tried},
            {"eps", ctx.cfg.eps},
            {"state_action_bound", bound}};
  mfg::save_json(r, ctx.artifact("pmbed.json").string());
  ctx.summary = r;
}

std::shared_ptr<mfg::TabularMultiTypeModel> obtain_multitype(const RunConfig& c) {
  if (!c.class_path.empty()) return mfg::multitype_from_json(mfg::load_json(c.class_path));
  mfg::MultiTypeSpec spec;
  spec.horizon = c.H;
  spec.types.assign(c.W, mfg::TypeShape{c.S, c.A});
  spec.sensitivity = c.sensitivity;
  spec.logit_scale = c.logit_scale;
  spec.seed = c.seed;
  return mfg::gen_multitype(spec);
}

void cmd_lift_mt(Context& ctx) {
  const auto mt = obtain_multitype(ctx.cfg);
  mfg::save_json(mfg::multitype_to_json(*mt), ctx.artifact("multitype.mfgclass.json").string());
  const mfg::LiftedModel lifted = mfg::lift(mt);
  const auto report = mfg::solve_constrained_ne(lifted, ctx.cfg.ne);
  const mfg::JointPolicy joint = mfg::lower_policy(lifted, report.policy);
  const auto typed = mfg::typed_ne_gaps(*mt, joint);
  json r = {{"W", mt->types()},
            {"lifted_shape", mfg::to_string(lifted.shape())},
            {"iterations", report.iterations},
            {"converged", report.converged},
            {"constrained_gap", report.gap},
            {"typed_gaps", typed},
            {"joint_policy", json::array()}};
  for (const auto& p : joint) r["joint_policy"].push_back(policy_to_json(p));
  mfg::save_json(r, ctx.artifact("lift.json").string());
  r.erase("joint_policy");
  ctx.summary = r;
  if (!report.converged) throw ReportedFailure("constrained NE solve did not reach the tolerance");
}

void cmd_mtsag_demo(Context& ctx) {
  const auto mt = obtain_multitype(ctx.cfg);
  if (static_cast<int>(ctx.cfg.populations.size()) != mt->types()) {
    throw mfg::ConfigError("populations needs one entry per type");
  }
  const mfg::LiftedModel lifted = mfg::lift(mt);
  const auto report = mfg::solve_constrained_ne(lifted, ctx.cfg.ne);
  const mfg::JointPolicy joint = mfg::lower_policy(lifted, report.policy);
  // One type-0 agent deviates to its best response against the mean-field flow of the
  // solved equilibrium; the gain should shrink as the populations grow.
  const auto frozen = mfg::mt_freeze(*mt, joint);
  const mfg::Policy deviation = mfg::optimize(frozen[0]).policy;
  const double mf_gain = mfg::typed_ne_gaps(*mt, joint)[0];

  std::ofstream csv(ctx.artifact("mtsag.csv"));
  csv << "N_total,mean_gain,stderr,episodes\n";
  csv.precision(10);
  json rows = json::array();
  for (int scale : {1, 2, 4, 8}) {
    std::vector<int> pops = ctx.cfg.populations;
    for (int& n : pops) n *= scale;
    const auto res = mfg::mtsag_simulate(*mt, pops, joint, 0, deviation, ctx.cfg.episodes,
                                         mfg::Rng::mix(ctx.cfg.seed + scale));
    csv << res.total_agents << ',' << res.mean_gain << ',' << res.stderr_gain << ',' << res.episodes << '\n';
    rows.push_back({{"N_total", res.total_agents}, {"mean_gain", res.mean_gain}, {"stderr", res.stderr_gain}});
  }
  ctx.summary = {{"mean_field_gain", mf_gain}, {"rows", rows}};
}

/// Summarises trace CSVs: final normalised gap, monotonicity, trajectory totals.
void cmd_report(Context& ctx, const std::vector<std::string>& traces) {
  if (traces.empty()) throw mfg::ConfigError("report needs at least one trace CSV");
  json rows = json::array();
  for (const auto& path : traces) {
    std::ifstream in(path);
    if (!in) throw mfg::ConfigError("cannot read " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("round,branch,inner_iter", 0) != 0) throw mfg::ConfigError(path + " is not a trace CSV");
    bool monotone = true;
    long long prev = -1;
    long long remaining = 0;
    long long trajectories = 0;
    double final_gap = 0.0;
    int records = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      if (cells.size() != 7) throw mfg::ConfigError(path + ": malformed row");
      remaining = std::stoll(cells[4]);
      trajectories = std::stoll(cells[5]);
      final_gap = std::stod(cells[6]);
      if (prev >= 0 && remaining > prev) monotone = false;
      prev = remaining;
      ++records;
    }
    rows.push_back({{"trace", path},
                    {"records", records},
                    {"models_remaining", remaining},
                    {"trajectories_total", trajectories},
                    {"final_norm_max_ne_gap", final_gap},
                    {"monotone", monotone}});
  }
  mfg::save_json(rows, ctx.artifact("report.json").string());
  ctx.summary["traces"] = rows;
  std::cout << rows.dump(2) << '\n';
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model elimination for mean-field games"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(MFG_VERSION));

  std::string preset_name;
  std::string config_file;
  std::string out_dir = ".";
  app.add_option("--preset", preset_name, "Parameter bundle (appxJ, toy)");
  app.add_option("--config", config_file, "JSON file with configuration keys");
  app.add_option("--out", out_dir, "Output directory");

  // Every configuration key is also a flag; values are parsed as JSON when possible.
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  const json defaults = default_config();
  for (const auto& [key, value] : defaults.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    flag_options[key] = app.add_option(flag, flag_values[key], "default: " + value.dump());
  }

  std::vector<std::string> trace_files;
  const std::vector<std::string> names = {"gen-env",     "solve-ne",       "run-elim",
                                          "run-mebp",    "run-mebp-exact", "estimate-pmbed",
                                          "lift-mt",     "mtsag-demo",     "report"};
  std::map<std::string, CLI::App*> subs;
  for (const auto& n : names) subs[n] = app.add_subcommand(n);
  subs["report"]->add_option("traces", trace_files, "Trace CSV files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Error& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto start = std::chrono::steady_clock::now();
  std::string sub;
  for (const auto& [n, s] : subs) {
    if (s->parsed()) sub = n;
  }

  Context ctx;
  json manifest = {{"tool", "mfgelim"},         {"version", MFG_VERSION}, {"subcommand", sub},
                   {"argv", json::array()},     {"started", utc_now()},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                 "." + std::to_string(EIGEN_MINOR_VERSION)}};
  for (int i = 0; i < argc; ++i) manifest["argv"].push_back(argv[i]);

  int code = 0;
  try {
    ctx.out = out_dir;
    fs::create_directories(ctx.out);
    json merged = default_config();
    merged.merge_patch(preset(preset_name));
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw mfg::ConfigError("cannot read config " + config_file);
      json file;
      try {
        file = json::parse(in);
      } catch (const json::exception& e) {
        throw mfg::ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      for (const auto& [key, value] : file.items()) {
        if (!merged.contains(key)) throw mfg::ConfigError("unknown config key '" + key + "'");
      }
      merged.merge_patch(file);
    }
    for (const auto& [key, opt] : flag_options) {
      if (opt->count() == 0) continue;
      const std::string& text = flag_values[key];
      json v = json::parse(text, nullptr, false);
      merged[key] = (v.is_discarded() || v.is_string() || v.is_object()) ? json(text) : v;
    }
    manifest["config"] = merged;
    ctx.cfg = parse_config(merged);
    mfg::set_max_threads(ctx.cfg.threads);
    manifest["preset"] = preset_name;
    manifest["seeds"] = {{"seed", ctx.cfg.seed}, {"sampler_seed", ctx.cfg.sampler_seed}};

    if (sub == "gen-env") cmd_gen_env(ctx);
    else if (sub == "solve-ne") cmd_solve_ne(ctx);
    else if (sub == "run-elim") cmd_run_elim(ctx);
    else if (sub == "run-mebp") cmd_run_mebp(ctx);
    else if (sub == "run-mebp-exact") cmd_run_mebp_exact(ctx);
    else if (sub == "estimate-pmbed") cmd_estimate_pmbed(ctx);
    else if (sub == "lift-mt") cmd_lift_mt(ctx);
    else if (sub == "mtsag-demo") cmd_mtsag_demo(ctx);
    else if (sub == "report") cmd_report(ctx, trace_files);
  } catch (const ReportedFailure& e) {
    log(Level::Error, e.what());
    manifest["failure"] = e.what();
    code = 1;
  } catch (const mfg::ConfigError& e) {
    log(Level::Error, e.what());
    manifest["failure"] = e.what();
    code = 2;
  } catch (const mfg::InvariantError& e) {
    log(Level::Error, std::string("invariant violated: ") + e.what());
    manifest["failure"] = e.what();
    code = 1;
  } catch (const std::exception& e) {
    log(Level::Error, e.what());
    manifest["failure"] = e.what();
    code = 1;
  }

  manifest["artifacts"] = ctx.artifacts;
  manifest["summary"] = ctx.summary;
  manifest["exit_code"] = code;
  manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!ctx.out.empty()) {
    try {
      mfg::save_json(manifest, (ctx.out / "manifest.json").string());
    } catch (const std::exception& e) {
      log(Level::Error, std::string("could not write manifest: ") + e.what());
    }
  }
  if (code == 0) log(Level::Info, sub + " done in " + manifest["wall_time_s"].dump() + " s");
  return code;
}
