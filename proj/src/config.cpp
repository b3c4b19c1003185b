#include "wfduality/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "wfduality/bcre.hpp"
#include "wfduality/bridge.hpp"
#include "wfduality/duality.hpp"
#include "wfduality/fvwrs.hpp"
#include "wfduality/thresholds.hpp"

#ifndef WFD_BUILD_ID
#define WFD_BUILD_ID "unknown"
#endif

namespace wfd {

const char* build_id() noexcept { return WFD_BUILD_ID; }

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) config_error(where + ": missing field '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) config_error(where + ": expected a number");
  return j.get<double>();
}

double get_number(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return number(j.at(key), where + "." + key);
}

std::int64_t get_integer(const json& j, const char* key, std::int64_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) config_error(where + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) config_error(where + ": expected a nonempty array of numbers");
  std::vector<double> out;
  for (const json& v : j) out.push_back(number(v, where));
  return out;
}

// `key` as a list, or `single` as a one-element list.
std::vector<double> numbers_or_one(const json& j, const char* key, const char* single, const std::string& where) {
  if (j.contains(key)) return number_list(j.at(key), where + "." + key);
  return {number(require(j, single, where), where + "." + single)};
}

// Infinite values are written as strings: JSON has no infinity.
json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

json estimate_json(const Estimate& e) { return {{"mean", num(e.mean)}, {"se", num(e.se)}, {"count", e.count}}; }

json report_json(const DualityReport& r, double threshold) {
  json echo = json::object();
  for (const auto& [k, v] : r.echo) echo[k] = v;
  return {{"identity", r.identity},
          {"lhs", estimate_json(r.lhs)},
          {"rhs", estimate_json(r.rhs)},
          {"z", num(r.z)},
          {"pass", r.passes(threshold)},
          {"params", echo}};
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

EnvSequence parse_env(const json& j, const FiniteModel& model, std::uint64_t seed) {
  if (j.is_array()) {
    EnvSequence env;
    env.values = number_list(j, "env");
    for (double y : env.values) {
      if (!(y >= 0.0 && y <= 1.0)) config_error("env: values must lie in [0,1]");
    }
    return env;
  }
  if (j.is_object() && j.contains("values")) return parse_env(j.at("values"), model, seed);
  if (j.is_object() && j.contains("length")) {
    const std::int64_t len = get_integer(j, "length", 1, "env");
    if (len < 1) config_error("env.length must be >= 1");
    const std::int64_t stream = get_integer(j, "stream", 0, "env");
    return model.draw_environment(static_cast<std::size_t>(len), seed, static_cast<std::uint64_t>(stream));
  }
  config_error("env: expected an array, {\"values\": [...]} or {\"length\": L, \"stream\": s}");
}

std::vector<std::int64_t> integer_list(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) config_error(where + ": expected a nonempty array of integers");
  std::vector<std::int64_t> out;
  for (const json& v : j) {
    if (!v.is_number_integer()) config_error(where + ": expected integers");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

FiniteMeasure parse_measure(const json& j, const std::string& where) {
  if (j.is_null()) return FiniteMeasure{};
  if (!j.is_object()) config_error(where + ": a measure must be an object");
  try {
    if (j.contains("atoms")) {
      const json& atoms = j.at("atoms");
      if (!atoms.is_array()) config_error(where + ".atoms: expected an array of [y, weight] pairs");
      std::vector<Atom> out;
      for (const json& a : atoms) {
        if (!a.is_array() || a.size() != 2) config_error(where + ".atoms: each atom must be [y, weight]");
        out.push_back({number(a[0], where + ".atoms"), number(a[1], where + ".atoms")});
      }
      return FiniteMeasure::atomic(std::move(out));
    }
    if (j.contains("density")) {
      const json& d = j.at("density");
      if (!d.is_string()) config_error(where + ".density: expected a string");
      const std::string s = d.get<std::string>();
      const double mass = get_number(j, "mass", 1.0, where);
      const auto nodes = static_cast<int>(get_integer(j, "nodes", 64, where));
      if (s == "uniform") return FiniteMeasure::uniform(mass, nodes);
      double a = 0.0;
      double b = 0.0;
      char close = 0;
      std::istringstream is(s);
      std::string head(5, '\0');
      is.read(head.data(), 5);
      char comma = 0;
      if (head == "beta(" && (is >> a >> comma >> b >> close) && comma == ',' && close == ')') {
        return FiniteMeasure::beta(a, b, mass, nodes);
      }
      config_error(where + ".density: expected \"uniform\" or \"beta(a,b)\", got \"" + s + "\"");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(where + ": " + e.what());
  }
  config_error(where + ": a measure needs \"atoms\" or \"density\"");
}

json measure_to_json(const FiniteMeasure& m) {
  if (m.kind() == FiniteMeasure::Kind::Atomic) {
    json atoms = json::array();
    for (const Atom& a : m.nodes()) atoms.push_back({a.location, a.weight});
    return {{"atoms", atoms}};
  }
  std::string density = "uniform";
  if (m.shape() == FiniteMeasure::Shape::Beta) {
    density = "beta(" + csv_number(m.shape_a()) + "," + csv_number(m.shape_b()) + ")";
  }
  return {{"density", density}, {"mass", m.total_mass()}, {"nodes", m.node_count()}};
}

SelectionKernel parse_kernel(const json& j) {
  std::string type;
  if (j.is_string()) {
    type = j.get<std::string>();
  } else if (j.is_object() && j.contains("type") && j.at("type").is_string()) {
    type = j.at("type").get<std::string>();
  } else {
    config_error("kernel: expected a name or {\"type\": ...}");
  }
  if (type == "geometric") return SelectionKernel::geometric();
  if (type == "binary") return SelectionKernel::binary();
  if (type == "table") {
    const json& entries = require(j, "entries", "kernel");
    if (!entries.is_array()) config_error("kernel.entries: expected an array");
    std::vector<SelectionKernel::TableEntry> out;
    for (const json& e : entries) {
      SelectionKernel::TableEntry t;
      t.y = number(require(e, "y", "kernel.entries"), "kernel.entries.y");
      t.pmf = number_list(require(e, "pmf", "kernel.entries"), "kernel.entries.pmf");
      t.inf_mass = get_number(e, "inf_mass", 0.0, "kernel.entries");
      out.push_back(std::move(t));
    }
    try {
      return SelectionKernel::table(std::move(out));
    } catch (const Error& e) {
      config_error(std::string("kernel: ") + e.what());
    }
  }
  config_error("kernel: unknown type \"" + type + "\"");
}

json kernel_to_json(const SelectionKernel& k) {
  if (k.kind() != SelectionKernel::Kind::Table) return {{"type", std::string(k.name())}};
  json entries = json::array();
  for (const auto& e : k.entries()) entries.push_back({{"y", e.y}, {"pmf", e.pmf}, {"inf_mass", e.inf_mass}});
  return {{"type", "table"}, {"entries", entries}};
}

LimitParams parse_limit(const json& j) {
  if (!j.is_object()) config_error("params: expected an object");
  const SelectionKernel kernel = parse_kernel(j.contains("kernel") ? j.at("kernel") : json("geometric"));
  const FiniteMeasure lambda_s = parse_measure(j.contains("lambda_s") ? j.at("lambda_s") : json(), "params.lambda_s");
  const FiniteMeasure lambda_c = parse_measure(j.contains("lambda_c") ? j.at("lambda_c") : json(), "params.lambda_c");
  if (lambda_s.has_atom_at(0.0)) config_error("params.lambda_s: atom at 0 is not allowed");
  if (lambda_c.has_atom_at(0.0)) config_error("params.lambda_c: atom at 0 is not allowed");
  const double w = get_number(j, "w", 0.0, "params");
  const double c = get_number(j, "c", 0.0, "params");
  const double sigma = get_number(j, "sigma", 0.0, "params");
  return LimitParams(kernel, lambda_s, w, lambda_c, c, sigma);
}

json limit_to_json(const LimitParams& p) {
  return {{"kernel", kernel_to_json(p.kernel())}, {"lambda_s", measure_to_json(p.lambda_s())},
          {"w", p.w()},                           {"lambda_c", measure_to_json(p.lambda_c())},
          {"c", p.c()},                           {"sigma", p.sigma()}};
}

FiniteModelParams parse_model(const json& j) {
  if (!j.is_object()) config_error("model: expected an object");
  FiniteModelParams p;
  p.N = get_integer(j, "N", 0, "model");
  p.kernel = parse_kernel(j.contains("kernel") ? j.at("kernel") : json("geometric"));
  p.env_law = j.contains("env_law") ? parse_measure(j.at("env_law"), "model.env_law") : FiniteMeasure::dirac(0.0);
  p.c_N = get_number(j, "c_N", 0.0, "model");
  p.lambda_c = parse_measure(j.contains("lambda_c") ? j.at("lambda_c") : json(), "model.lambda_c");
  return p;
}

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) config_error("config: top level must be an object");
  ExperimentConfig cfg;
  const json& kind = require(doc, "experiment", "config");
  if (!kind.is_string()) config_error("config.experiment: expected a string");
  cfg.experiment = kind.get<std::string>();
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), cfg.experiment) == kinds.end()) {
    config_error("config.experiment: unknown experiment \"" + cfg.experiment + "\"");
  }
  const std::int64_t seed = get_integer(doc, "seed", 1, "config");
  const std::int64_t replicates = get_integer(doc, "replicates", 100000, "config");
  const std::int64_t workers = get_integer(doc, "workers", 0, "config");
  if (seed < 0) config_error("config.seed must be >= 0");
  if (replicates < 1) config_error("config.replicates must be >= 1");
  if (workers < 0) config_error("config.workers must be >= 0");
  cfg.opts.seed = static_cast<std::uint64_t>(seed);
  cfg.opts.replicates = static_cast<std::size_t>(replicates);
  cfg.opts.workers = static_cast<unsigned>(workers);
  cfg.z_threshold = get_number(doc, "z_threshold", kDefaultZThreshold, "config");
  cfg.body = doc;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  const json& b = cfg.body;
  const std::string& k = cfg.experiment;
  std::vector<std::string> notes;
  notes.push_back("experiment: " + k);
  if (k == "simulate-finite" || k == "duality-quenched" || k == "duality-annealed") {
    const FiniteModel model(parse_model(require(b, "model", "config")));
    notes.push_back("finite model: N=" + std::to_string(model.N()) + ", env_law " + model.params().env_law.describe());
    if (k != "duality-annealed" && b.contains("env")) {
      const EnvSequence env = parse_env(b.at("env"), model, cfg.opts.seed);
      notes.push_back("environment length " + std::to_string(env.values.size()));
    }
    return notes;
  }
  const LimitParams params = parse_limit(require(b, "params", "config"));
  notes.push_back("master condition holds; Lambda_s mass " + csv_number(check_master_condition(params.kernel(), params.lambda_s())));
  const double mu = params.mu_mass();
  if (!std::isfinite(mu)) throw Error(ErrorCode::ModelError, "mu is not a finite measure");
  notes.push_back("mu mass " + csv_number(mu));
  if (k == "simulate-x" || k == "duality-moment" || k == "fixation" || k == "convergence" || k == "extinction") {
    const double intensity = params.coalescence_intensity();
    if (!std::isfinite(intensity)) {
      throw Error(ErrorCode::InfiniteJumpIntensity, "c * integral z^-2 Lambda_c(dz) is infinite");
    }
    notes.push_back("Lambda_c jump intensity " + csv_number(intensity));
  }
  if (k == "thresholds" || k == "extinction" || (k == "fixation" && params.sigma() == 0.0)) {
    const ThresholdReport r = classify(params, get_number(b, "tol", kDefaultClassifyTol, "config"));
    notes.push_back("regime " + std::string(to_string(r.regime)));
  }
  if (k == "convergence") {
    ScalingScheme scheme;
    if (b.contains("scaling")) scheme.exponent = get_number(b.at("scaling"), "exponent", 0.75, "config.scaling");
    for (std::int64_t N : integer_list(require(b, "Ns", "config"), "config.Ns")) scheme.validate(params, N);
    notes.push_back("scaling scheme consistent for every N");
  }
  return notes;
}

// ---------------------------------------------------------------------------

namespace {

RunResult run_simulate_x(const ExperimentConfig& cfg) {
  const json& b = cfg.body;
  const LimitParams params = parse_limit(require(b, "params", "config"));
  const double x0 = get_number(b, "x0", 0.5, "config");
  const double T = number(require(b, "T", "config"), "config.T");
  const double dt = get_number(b, "dt", 1e-3, "config");
  const std::int64_t paths = get_integer(b, "paths", 1, "config");
  const std::int64_t every = std::max<std::int64_t>(1, get_integer(b, "record_every", 1, "config"));
  const FvwrsSimulator sim(params);
  RunResult res;
  std::ostringstream path_csv;
  std::ostringstream jump_csv;
  path_csv << "path,t,x\n";
  jump_csv << "path,time,kind,before,after\n";
  json summary = json::array();
  for (std::int64_t p = 0; p < paths; ++p) {
    Rng rng(cfg.opts.seed, StreamDomain::Limit, static_cast<std::uint64_t>(p));
    const PathX path = sim.simulate_path(x0, T, dt, rng, true);
    for (std::size_t k = 0; k < path.values.size(); k += static_cast<std::size_t>(every)) {
      path_csv << p << ',' << csv_number(static_cast<double>(k) * dt) << ',' << csv_number(path.values[k]) << '\n';
    }
    for (const JumpRecord& j : path.jumps) {
      jump_csv << p << ',' << csv_number(j.time) << ',' << (j.kind == JumpKind::Selection ? "selection" : "coalescence")
               << ',' << csv_number(j.before) << ',' << csv_number(j.after) << '\n';
    }
    summary.push_back({{"path", p},
                       {"final", path.values.back()},
                       {"absorbed", path.absorbed},
                       {"absorption_time", path.absorbed ? json(path.absorption_time) : json()},
                       {"jumps", path.jumps.size()}});
  }
  res.payload = {{"paths", summary}};
  res.csv["path_x.csv"] = path_csv.str();
  res.csv["jumps_x.csv"] = jump_csv.str();
  return res;
}

RunResult run_simulate_z(const ExperimentConfig& cfg) {
  const json& b = cfg.body;
  const LimitParams params = parse_limit(require(b, "params", "config"));
  const std::int64_t n0 = get_integer(b, "n0", 1, "config");
  const double T = number(require(b, "T", "config"), "config.T");
  const std::int64_t paths = get_integer(b, "paths", 1, "config");
  const std::int64_t ceiling = get_integer(b, "ceiling", kDefaultStateCeiling, "config");
  const std::int64_t capacity = get_integer(b, "rate_cache", static_cast<std::int64_t>(kDefaultRateCacheCapacity), "config");
  const BcreSimulator sim(params, ceiling, static_cast<std::size_t>(std::max<std::int64_t>(1, capacity)));
  RunResult res;
  std::ostringstream csv;
  csv << "path,time,from,to\n";
  json summary = json::array();
  for (std::int64_t p = 0; p < paths; ++p) {
    Rng rng(cfg.opts.seed, StreamDomain::Backward, static_cast<std::uint64_t>(p));
    const PathZ path = sim.simulate(n0, T, rng);
    for (const ZEvent& e : path.events) csv << p << ',' << csv_number(e.time) << ',' << e.from << ',' << e.to << '\n';
    summary.push_back({{"path", p}, {"final", path.final_state()}, {"events", path.events.size()}});
  }
  res.payload = {{"n0", n0}, {"T", T}, {"paths", summary}};
  res.csv["events_z.csv"] = csv.str();
  return res;
}

RunResult run_simulate_finite(const ExperimentConfig& cfg) {
  const json& b = cfg.body;
  const FiniteModel model(parse_model(require(b, "model", "config")));
  const EnvSequence env = parse_env(require(b, "env", "config"), model, cfg.opts.seed);
  const double x = get_number(b, "x", 0.5, "config");
  const auto count = static_cast<std::int64_t>(std::llround(x * static_cast<double>(model.N())));
  const std::int64_t n0 = get_integer(b, "n0", 1, "config");
  Rng fwd(cfg.opts.seed, StreamDomain::Finite, 0);
  Rng bwd(cfg.opts.seed, StreamDomain::Finite, 1);
  const FrequencyPath fp = model.simulate_frequency(count, env, fwd);
  const BlockCountPath bp = model.simulate_ancestry(n0, env, bwd);
  RunResult res;
  std::ostringstream f;
  f << "generation,count,x,y\n";
  for (std::size_t g = 0; g < fp.counts.size(); ++g) {
    f << g << ',' << fp.counts[g] << ',' << csv_number(fp.value(g)) << ','
      << (g < env.values.size() ? csv_number(env.values[g]) : "") << '\n';
  }
  std::ostringstream a;
  a << "step,blocks\n";
  for (std::size_t l = 0; l < bp.counts.size(); ++l) a << l << ',' << bp.counts[l] << '\n';
  res.payload = {{"N", model.N()},
                 {"env", env.values},
                 {"env_drawn", env.drawn},
                 {"env_stream", env.stream_index},
                 {"final_count", fp.counts.back()},
                 {"final_blocks", bp.counts.back()},
                 {"saturations", bp.saturations}};
  res.csv["frequency.csv"] = f.str();
  res.csv["ancestry.csv"] = a.str();
  return res;
}

RunResult run_duality_finite(const ExperimentConfig& cfg, bool quenched) {
  const json& b = cfg.body;
  const FiniteModel model(parse_model(require(b, "model", "config")));
  const double x = number(require(b, "x", "config"), "config.x");
  const std::int64_t n = get_integer(b, "n", 1, "config");
  DualityReport r;
  if (quenched) {
    r = quenched_check(model, parse_env(require(b, "env", "config"), model, cfg.opts.seed), x, n, cfg.opts);
  } else {
    r = annealed_check(model, static_cast<std::size_t>(get_integer(b, "generations", 1, "config")), x, n, cfg.opts);
  }
  RunResult res;
  res.payload = {{"reports", json::array({report_json(r, cfg.z_threshold)})}};
  res.verdict_ok = r.passes(cfg.z_threshold);
  return res;
}

RunResult run_duality_moment(const ExperimentConfig& cfg) {
  const json& b = cfg.body;
  const LimitParams params = parse_limit(require(b, "params", "config"));
  const double x = number(require(b, "x", "config"), "config.x");
  std::vector<int> ns;
  for (double v : numbers_or_one(b, "ns", "n", "config")) {
    if (v != std::floor(v) || v < 1) config_error("config.ns: orders must be positive integers");
    ns.push_back(static_cast<int>(v));
  }
  const auto times = numbers_or_one(b, "times", "t", "config");
  const double dt = get_number(b, "dt", 1e-3, "config");
  const auto grid = moment_check_grid(params, x, ns, times, dt, cfg.opts);
  RunResult res;
  json reports = json::array();
  std::ostringstream csv;
  csv << "t,n,lhs,lhs_se,rhs,rhs_se,z\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t j = 0; j < ns.size(); ++j) {
      const DualityReport& r = grid[i][j];
      reports.push_back(report_json(r, cfg.z_threshold));
      res.verdict_ok = res.verdict_ok && r.passes(cfg.z_threshold);
      csv << csv_number(times[i]) << ',' << ns[j] << ',' << csv_number(r.lhs.mean) << ',' << csv_number(r.lhs.se) << ','
          << csv_number(r.rhs.mean) << ',' << csv_number(r.rhs.se) << ',' << csv_number(r.z) << '\n';
    }
  }
  res.payload = {{"reports", reports}};
  res.csv["moments.csv"] = csv.str();
  return res;
}

RunResult run_thresholds(const ExperimentConfig& cfg) {
  const json& b = cfg.body;
  const LimitParams params = parse_limit(require(b, "params", "config"));
  const ThresholdReport r = classify(params, get_number(b, "tol", kDefaultClassifyTol, "config"));
  RunResult res;
  res.payload = {{"beta_star", num(r.beta_star)},
                 {"threshold", num(r.threshold)},
                 {"alpha_star", num(r.alpha_star)},
                 {"alpha_s", r.alpha_s},
                 {"w", r.w},
                 {"c", r.c},
                 {"alpha_eff", num(r.alpha_eff)},
                 {"margin", num(r.margin)},
                 {"tol", r.tol},
                 {"classification", std::string(to_string(r.regime))},
                 {"beta_method", r.beta_method},
                 {"alpha_method", r.alpha_method}};
  const std::int64_t samples = get_integer(b, "monte_carlo_samples", 0, "config");
  if (samples > 0) {
    json mc = json::object();
    if (params.lambda_c().kind() == FiniteMeasure::Kind::Atomic && !params.lambda_c().empty() &&
        std::isfinite(r.beta_star)) {
      mc["beta_star"] = estimate_json(beta_star_monte_carlo(params.lambda_c(), static_cast<std::size_t>(samples), cfg.opts.seed));
    }
    if (params.lambda_s().kind() == FiniteMeasure::Kind::Atomic && !params.lambda_s().empty()) {
      mc["alpha_star"] = estimate_json(
          alpha_star_monte_carlo(params.kernel(), params.lambda_s(), static_cast<std::size_t>(samples), cfg.opts.seed));
    }
    res.payload["monte_carlo"] = mc;
  }
  return res;
}

RunResult run_fixation(const ExperimentConfig& cfg) {
  const json& b = cfg.body;
  const LimitParams params = parse_limit(require(b, "params", "config"));
  const auto xs = number_list(require(b, "x_grid", "config"), "config.x_grid");
  FixationBudget budget;
  if (b.contains("budget")) {
    const json& j = b.at("budget");
    budget.stationary_runs = static_cast<std::size_t>(get_integer(j, "stationary_runs", 200, "config.budget"));
    budget.n0 = get_integer(j, "n0", budget.n0, "config.budget");
    budget.burn_in = get_number(j, "burn_in", budget.burn_in, "config.budget");
    budget.horizon = get_number(j, "horizon", budget.horizon, "config.budget");
    budget.absorption_horizon = get_number(j, "absorption_horizon", budget.absorption_horizon, "config.budget");
    budget.dt = get_number(j, "dt", budget.dt, "config.budget");
    budget.eps = get_number(j, "eps", budget.eps, "config.budget");
    budget.tv_threshold = get_number(j, "tv_threshold", budget.tv_threshold, "config.budget");
  }
  const FixationReport r = fixation_via_duality(params, xs, budget, cfg.opts);
  RunResult res;
  json points = json::array();
  std::ostringstream csv;
  csv << "x,predicted,predicted_se,simulated,simulated_se,interior,z\n";
  for (const FixationPoint& p : r.points) {
    const bool pass = std::abs(p.z) < cfg.z_threshold;
    res.verdict_ok = res.verdict_ok && pass;
    points.push_back({{"x", p.x},
                      {"predicted", estimate_json(p.predicted)},
                      {"simulated", estimate_json(p.simulated)},
                      {"interior_fraction", p.interior},
                      {"z", num(p.z)},
                      {"pass", pass}});
    csv << csv_number(p.x) << ',' << csv_number(p.predicted.mean) << ',' << csv_number(p.predicted.se) << ','
        << csv_number(p.simulated.mean) << ',' << csv_number(p.simulated.se) << ',' << csv_number(p.interior) << ','
        << csv_number(p.z) << '\n';
  }
  std::ostringstream nu;
  nu << "state,probability\n";
  for (std::size_t k = 1; k < r.nu.size(); ++k) nu << k << ',' << csv_number(r.nu[k]) << '\n';
  res.payload = {{"regime", r.regime ? json(std::string(to_string(*r.regime))) : json()},
                 {"points", points},
                 {"nonconverged_runs", r.nonconverged_runs},
                 {"non_convergence_warning", r.nonconverged_runs > 0},
                 {"max_tv_halves", r.max_tv_halves}};
  res.csv["fixation.csv"] = csv.str();
  res.csv["nu.csv"] = nu.str();
  return res;
}

RunResult run_convergence(const ExperimentConfig& cfg) {
  const json& b = cfg.body;
  const LimitParams params = parse_limit(require(b, "params", "config"));
  const auto Ns = integer_list(require(b, "Ns", "config"), "config.Ns");
  ScalingScheme scheme;
  if (b.contains("scaling")) scheme.exponent = get_number(b.at("scaling"), "exponent", 0.75, "config.scaling");
  const double x = number(require(b, "x", "config"), "config.x");
  const std::int64_t n = get_integer(b, "n", 1, "config");
  const double t = number(require(b, "t", "config"), "config.t");
  const ConvergenceTable table = convergence_experiment(params, Ns, scheme, x, n, t, cfg.opts);
  RunResult res;
  json rows = json::array();
  std::ostringstream csv;
  csv << "N,rho,generations,finite,finite_se,limit,limit_se,gap,gap_se\n";
  for (const ConvergenceRow& r : table.rows) {
    rows.push_back({{"N", r.N},
                    {"rho", r.rho},
                    {"generations", r.generations},
                    {"finite", estimate_json(r.finite)},
                    {"gap", r.gap},
                    {"gap_se", r.gap_se}});
    csv << r.N << ',' << csv_number(r.rho) << ',' << r.generations << ',' << csv_number(r.finite.mean) << ','
        << csv_number(r.finite.se) << ',' << csv_number(table.limit.mean) << ',' << csv_number(table.limit.se) << ','
        << csv_number(r.gap) << ',' << csv_number(r.gap_se) << '\n';
  }
  const ConvergenceRow& first = table.rows.front();
  const ConvergenceRow& last = table.rows.back();
  const double combined = std::sqrt(first.gap_se * first.gap_se + last.gap_se * last.gap_se);
  res.verdict_ok = first.gap - last.gap > 2.0 * combined;
  res.payload = {{"limit", estimate_json(table.limit)}, {"rows", rows}, {"gap_shrinks", res.verdict_ok}};
  res.csv["convergence.csv"] = csv.str();
  return res;
}

RunResult run_extinction(const ExperimentConfig& cfg) {
  const json& b = cfg.body;
  const LimitParams params = parse_limit(require(b, "params", "config"));
  const double x = get_number(b, "x", 0.5, "config");
  const auto horizons = number_list(require(b, "horizons", "config"), "config.horizons");
  const double dt = get_number(b, "dt", 1e-2, "config");
  const std::int64_t m0 = get_integer(b, "m0", 10, "config");
  const std::int64_t n0 = get_integer(b, "n0", 1, "config");
  const double min_final = get_number(b, "min_final_fraction", 0.95, "config");
  const ExtinctionReport r = extinction_corroboration(params, x, horizons, dt, m0, n0, cfg.opts);
  RunResult res;
  json rows = json::array();
  std::ostringstream csv;
  csv << "horizon,fraction_at_0,fraction_se,p_z_at_most_m0,p_se,guard_triggers\n";
  for (const ExtinctionRow& row : r.rows) {
    rows.push_back({{"horizon", row.horizon},
                    {"fraction_at_0", estimate_json(row.fraction_at_zero)},
                    {"p_z_at_most_m0", estimate_json(row.z_at_most)},
                    {"guard_triggers", row.guard_triggers}});
    csv << csv_number(row.horizon) << ',' << csv_number(row.fraction_at_zero.mean) << ','
        << csv_number(row.fraction_at_zero.se) << ',' << csv_number(row.z_at_most.mean) << ','
        << csv_number(row.z_at_most.se) << ',' << row.guard_triggers << '\n';
  }
  res.verdict_ok = r.rows.back().fraction_at_zero.mean >= min_final;
  res.payload = {{"regime", std::string(to_string(r.regime))}, {"m0", m0}, {"rows", rows}};
  res.csv["extinction.csv"] = csv.str();
  return res;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  const std::string& k = cfg.experiment;
  if (k == "simulate-x") return run_simulate_x(cfg);
  if (k == "simulate-z") return run_simulate_z(cfg);
  if (k == "simulate-finite") return run_simulate_finite(cfg);
  if (k == "duality-quenched") return run_duality_finite(cfg, true);
  if (k == "duality-annealed") return run_duality_finite(cfg, false);
  if (k == "duality-moment") return run_duality_moment(cfg);
  if (k == "thresholds") return run_thresholds(cfg);
  if (k == "fixation") return run_fixation(cfg);
  if (k == "convergence") return run_convergence(cfg);
  if (k == "extinction") return run_extinction(cfg);
  config_error("unknown experiment \"" + k + "\"");
}

json make_envelope(const ExperimentConfig& cfg, const RunResult& result, double wall_seconds) {
  json config = cfg.body;
  config["seed"] = cfg.opts.seed;
  config["replicates"] = cfg.opts.replicates;
  config["workers"] = resolve_workers(cfg.opts.workers);
  config["z_threshold"] = cfg.z_threshold;
  return {{"build", build_id()},
          {"wall_time_seconds", wall_seconds},
          {"config", config},
          {"verdict", result.verdict_ok ? "pass" : "fail"},
          {"payload", result.payload}};
}

}  // namespace wfd
