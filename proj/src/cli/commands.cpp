#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "cli/config.hpp"
#include "cli/content_hash.hpp"
#include "cli/svg.hpp"
#include "sncert/certify_post.hpp"
#include "sncert/certify_pre.hpp"
#include "sncert/envs.hpp"
#include "sncert/errors.hpp"
#include "sncert/roa.hpp"
#include "sncert/trainer.hpp"

namespace sncert::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ResolvedPlant {
  DiscreteLtiPlant plant;
  std::optional<EnvSpec> env;
  std::vector<std::string> state_names;
  json provenance;
};

ResolvedPlant resolve(const PlantSource& src) {
  if (!src.plant_path.empty() && !src.env.empty()) {
    throw ParseError("give either --plant or --env, not both");
  }
  if (!src.env.empty()) {
    EnvSpec env = make_env(src.env);
    auto names = env.state_names;
    return {env.plant, env, names, {{"env", src.env}}};
  }
  if (src.plant_path.empty()) throw ParseError("need --plant PATH or --env NAME");
  DiscreteLtiPlant plant = load_plant(src.plant_path);
  std::vector<std::string> names;
  for (int i = 0; i < plant.state_dim(); ++i) names.push_back("x" + std::to_string(i));
  return {plant, std::nullopt, names,
          {{"plant", src.plant_path}, {"plant_hash", git_blob_hash_file(src.plant_path)}}};
}

MlpPolicy load_checked_policy(const std::string& path, const DiscreteLtiPlant& plant) {
  if (path.empty()) throw ParseError("need --policy PATH");
  MlpPolicy policy = load_policy(path);
  if (policy.state_dim() != plant.state_dim() || policy.input_dim() != plant.input_dim()) {
    std::ostringstream msg;
    msg << "dimension mismatch: plant has n_x=" << plant.state_dim()
        << ", n_u=" << plant.input_dim() << " but policy " << path
        << " maps n_x=" << policy.state_dim() << " to n_u=" << policy.input_dim();
    throw ContractViolation(msg.str());
  }
  return policy;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ParseError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw ParseError("failed writing " + path.string());
}

std::string hash_line(const std::string& hash) { return "# config_hash=" + hash + "\n"; }

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string curve_csv(const LearningCurve& curve, const std::string& hash) {
  std::ostringstream os;
  os << hash_line(hash) << "env_steps,mean,min,max\n";
  os.precision(17);
  for (const auto& p : curve.points) {
    os << p.env_steps << ',' << p.mean_return << ',' << p.min_return << ',' << p.max_return << '\n';
  }
  return os.str();
}

std::string trajectory_csv(const TrajectoryRecord& rec, const std::vector<std::string>& names,
                           int nu, bool with_reward, const std::string& hash) {
  std::ostringstream os;
  os << hash_line(hash) << 'k';
  for (const auto& n : names) os << ',' << n;
  for (int i = 0; i < nu; ++i) os << ",u" << i;
  if (with_reward) os << ",reward";
  os << '\n';
  os.precision(17);
  for (int k = 0; k < rec.steps(); ++k) {
    const auto sk = static_cast<std::size_t>(k);
    os << k;
    for (Eigen::Index i = 0; i < rec.states[sk].size(); ++i) os << ',' << rec.states[sk](i);
    for (Eigen::Index i = 0; i < rec.inputs[sk].size(); ++i) os << ',' << rec.inputs[sk](i);
    if (with_reward) os << ',' << rec.rewards[sk];
    os << '\n';
  }
  return os.str();
}

double parse_component(const std::string& raw) {
  std::string s = raw;
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  double sign = 1.0;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    if (s[0] == '-') sign = -1.0;
    s.erase(0, 1);
  }
  if (s == "pi" || s == "\xcf\x80") return sign * std::numbers::pi;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("x0: '" + raw + "' is not a number");
  }
  if (used != s.size()) throw ParseError("x0: '" + raw + "' is not a number");
  return sign * v;
}

Vector parse_state(const std::string& text, int n) {
  std::vector<double> vals;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, ',')) vals.push_back(parse_component(cur));
  if (static_cast<int>(vals.size()) != n) {
    throw ParseError("x0: expected " + std::to_string(n) + " comma-separated values, got " +
                     std::to_string(vals.size()));
  }
  return Eigen::Map<Vector>(vals.data(), n);
}

json frontier_json(const std::vector<FrontierPoint>& f) {
  json arr = json::array();
  for (const auto& p : f) arr.push_back({p.mu, p.feasible});
  return arr;
}

std::string frontier_csv(const std::vector<FrontierPoint>& f, const std::string& hash) {
  std::ostringstream os;
  os << hash_line(hash);
  write_frontier_csv(os, f);
  return os.str();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
  std::vector<double> values(int col) const {
    std::vector<double> out;
    for (const auto& r : rows) {
      if (col >= 0 && static_cast<std::size_t>(col) < r.size()) out.push_back(r[static_cast<std::size_t>(col)]);
    }
    return out;
  }
};

std::optional<CsvTable> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        row.push_back(std::nan(""));
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

json margins_json(const StabilityCertificate& c) {
  return {{"lmi1_margin", c.lmi1_margin},
          {"lmi2_min_eig", c.lmi2_min_eig},
          {"p_min_eig", c.p_min_eig},
          {"lambda_min", c.lambda_min}};
}

}  // namespace

int run_guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const CertificateRejected& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const NumericError& e) {
    err << "error: numeric failure: " << e.what() << '\n';
    return kExitNumericFailure;
  } catch (const NormalizationError& e) {
    err << "error: numeric failure: " << e.what() << '\n';
    return kExitNumericFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

int cmd_train(const TrainOptions& opt, std::ostream& out) {
  RunConfig cfg = opt.config_path.empty() ? RunConfig{} : load_run_config(opt.config_path);
  if (!opt.env.empty()) cfg.env = opt.env;
  if (opt.seed) cfg.seeds = {*opt.seed};
  if (!opt.out.empty()) cfg.out = opt.out;
  cfg.validate();
  const json canonical = to_json(cfg);
  const std::string hash = config_hash(cfg);

  const EnvSpec env = make_env(cfg.env);
  const fs::path dir = cfg.out;
  ensure_dir(dir);

  struct SeedRun {
    std::uint64_t seed;
    TrainResult result;
  };
  std::vector<SeedRun> runs;
  json artifacts = json::object();
  const bool multi = cfg.seeds.size() > 1;
  for (std::uint64_t seed : cfg.seeds) {
    PpoConfig ppo = cfg.ppo;
    ppo.seed = seed;
    TrainResult r = train(env, cfg.hidden, cfg.mode, cfg.deltas, ppo);
    if (multi) {
      const std::string suffix = "_seed" + std::to_string(seed);
      json pj = policy_to_json(r.policy);
      pj["config_hash"] = hash;
      pj["seed"] = seed;
      write_json(dir / ("policy" + suffix + ".json"), pj);
      write_text(dir / ("curve" + suffix + ".csv"), curve_csv(r.curve, hash));
    }
    runs.push_back({seed, std::move(r)});
  }

  // Best seed by the last evaluation return.
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const auto& a = runs[i].result.curve.points;
    const auto& b = runs[best].result.curve.points;
    if (!a.empty() && (b.empty() || a.back().mean_return > b.back().mean_return)) best = i;
  }

  LearningCurve aggregate;
  if (!multi) {
    aggregate = runs.front().result.curve;
  } else {
    const std::size_t n = runs.front().result.curve.points.size();
    for (std::size_t k = 0; k < n; ++k) {
      CurvePoint p;
      p.env_steps = runs.front().result.curve.points[k].env_steps;
      p.min_return = std::numeric_limits<double>::infinity();
      p.max_return = -std::numeric_limits<double>::infinity();
      for (const auto& r : runs) {
        const double v = r.result.curve.points[k].mean_return;
        p.mean_return += v / static_cast<double>(runs.size());
        p.min_return = std::min(p.min_return, v);
        p.max_return = std::max(p.max_return, v);
      }
      aggregate.points.push_back(p);
    }
  }

  const MlpPolicy& chosen = runs[best].result.policy;
  json pj = policy_to_json(chosen);
  pj["config_hash"] = hash;
  pj["seed"] = runs[best].seed;
  write_json(dir / "policy.json", pj);
  write_text(dir / "curve.csv", curve_csv(aggregate, hash));
  json plant = plant_to_json(env.plant);
  plant["config_hash"] = hash;
  write_json(dir / "plant.json", plant);
  const EvalResult ev = evaluate(env, chosen, {env.eval_starts.front()}, env.max_episode_steps);
  write_text(dir / "trajectory.csv",
             trajectory_csv(ev.trajectories.front(), env.state_names, env.plant.input_dim(), true, hash));

  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name != "manifest.json") {
      artifacts[name] = git_blob_hash_file(entry.path());
    }
  }
  json seeds = json::array();
  for (const auto& r : runs) {
    const auto& pts = r.result.curve.points;
    seeds.push_back({{"seed", r.seed},
                     {"final_eval_return", pts.empty() ? 0.0 : pts.back().mean_return},
                     {"updates", r.result.updates},
                     {"gradient_steps", r.result.gradient_steps}});
  }
  const json manifest = {{"command", "train"},   {"config", canonical},
                         {"config_hash", hash},  {"seeds", seeds},
                         {"best_seed", runs[best].seed}, {"artifacts", artifacts}};
  write_json(dir / "manifest.json", manifest);

  const auto& last = ev.trajectories.front().states.back();
  out << json({{"config_hash", hash},
               {"out", dir.string()},
               {"best_seed", runs[best].seed},
               {"final_state_norm", last.norm()},
               {"final_eval_return", ev.returns.front()}})
             .dump(2)
      << '\n';
  return kExitOk;
}

int cmd_gain(const GainOptions& opt, std::ostream& out) {
  const ResolvedPlant rp = resolve(opt.source);
  json config = {{"command", "gain"}, {"source", rp.provenance}};
  const std::string hash = config_hash(config);
  const L2GainResult g = l2_gain(rp.plant);
  json j;
  j["kind"] = g.finite ? "finite" : "unbounded";
  if (g.finite) {
    j["gain"] = g.gain;
    j["peak_frequency"] = g.peak_frequency;
  }
  j["spectral_radius"] = g.spectral_radius;
  j["config_hash"] = hash;
  if (!opt.out.empty()) {
    ensure_dir(opt.out);
    write_json(fs::path(opt.out) / "gain.json", j);
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_certify_pre(const CertifyPreOptions& opt, std::ostream& out) {
  const ResolvedPlant rp = resolve(opt.source);
  const MlpPolicy policy = load_checked_policy(opt.policy_path, rp.plant);
  json config = {{"command", "certify-pre"},
                 {"source", rp.provenance},
                 {"policy_hash", git_blob_hash_file(opt.policy_path)}};
  const std::string hash = config_hash(config);
  const SmallGainReport report = check_small_gain(rp.plant, policy);
  json j = to_json(report);
  j["deltas"] = policy.deltas();
  j["config_hash"] = hash;
  if (!opt.out.empty()) {
    ensure_dir(opt.out);
    write_json(fs::path(opt.out) / "certificate_pre.json", j);
  }
  out << j.dump(2) << '\n';
  return report.certified ? kExitOk : kExitInfeasible;
}

int cmd_certify_post(const CertifyPostOptions& opt, std::ostream& out) {
  const ResolvedPlant rp = resolve(opt.source);
  const MlpPolicy policy = load_checked_policy(opt.policy_path, rp.plant);
  if (policy.hidden_layers() < 1) {
    throw ContractViolation("certify-post needs a policy with at least one hidden layer");
  }
  json config = {{"command", "certify-post"},
                 {"source", rp.provenance},
                 {"policy_hash", git_blob_hash_file(opt.policy_path)},
                 {"mu_min", opt.mu_min},
                 {"mu_max", opt.mu_max},
                 {"rel_tol", opt.rel_tol}};
  const std::string hash = config_hash(config);

  const VbarSearchResult res = search_vbar(rp.plant, policy, opt.mu_min, opt.mu_max, opt.rel_tol);
  json j;
  j["feasible"] = res.feasible;
  j["policy_mode"] = to_string(policy.mode());
  if (policy.mode() == NormalizationMode::Pre) {
    j["note"] = "pre-mode policy analysed as a special case of the local sector certificate";
  }
  j["frontier"] = frontier_json(res.frontier);
  j["message"] = res.message;
  if (res.feasible && res.certificate) {
    const auto& cert = *res.certificate;
    verify_certificate(rp.plant, policy, res.sectors, cert);
    j["mu"] = res.mu;
    j["P"] = matrix_to_json(cert.p);
    j["lambda"] = vector_to_json(cert.lambda);
    j["vbar1"] = vector_to_json(cert.vbar1);
    j["x_star"] = vector_to_json(cert.x_star);
    j["objective"] = cert.objective;
    j["margins"] = margins_json(cert);
    j["ellipsoid_in_polytope"] = ellipsoid_in_polytope(cert, policy.weights().front());
    j["volume_proxy"] = volume_proxy(ellipsoid_of(cert));
  }
  j["config_hash"] = hash;
  if (!opt.out.empty()) {
    ensure_dir(opt.out);
    write_json(fs::path(opt.out) / "certificate.json", j);
    write_text(fs::path(opt.out) / "frontier.csv", frontier_csv(res.frontier, hash));
  }
  out << j.dump(2) << '\n';
  return res.feasible ? kExitOk : kExitInfeasible;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
  const ResolvedPlant rp = resolve(opt.source);
  const MlpPolicy policy = load_checked_policy(opt.policy_path, rp.plant);
  if (opt.steps < 1) throw ParseError("--steps must be >= 1");
  Vector x0;
  if (!opt.x0.empty()) {
    x0 = parse_state(opt.x0, rp.plant.state_dim());
  } else if (rp.env) {
    x0 = rp.env->eval_starts.front();
  } else {
    throw ParseError("need --x0 when simulating a plant file");
  }
  const int steps = rp.env ? std::min(opt.steps, rp.env->max_episode_steps) : opt.steps;
  json config = {{"command", "simulate"},
                 {"source", rp.provenance},
                 {"policy_hash", git_blob_hash_file(opt.policy_path)},
                 {"x0", vector_to_json(x0)},
                 {"steps", steps}};
  const std::string hash = config_hash(config);

  const Controller ctrl = [&](const Vector& x) { return act(policy, x); };
  TrajectoryRecord rec = rp.env ? rollout(*rp.env, ctrl, x0, steps)
                                : simulate(rp.plant, ctrl, x0, steps, nullptr);
  const std::string csv =
      trajectory_csv(rec, rp.state_names, rp.plant.input_dim(), rp.env.has_value(), hash);
  json j = {{"steps", rec.steps()},
            {"terminated", rec.terminated},
            {"diverged", rec.diverged},
            {"final_state", vector_to_json(rec.states.back())},
            {"final_state_norm", rec.states.back().norm()},
            {"config_hash", hash}};
  if (rp.env) {
    double total = 0.0;
    for (double r : rec.rewards) total += r;
    j["return"] = total;
  }
  if (!opt.out.empty()) {
    ensure_dir(opt.out);
    write_text(fs::path(opt.out) / "trajectory.csv", csv);
    write_json(fs::path(opt.out) / "trajectory.json", j);
  } else {
    out << csv;
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_roa_grid(const RoaGridOptions& opt, std::ostream& out) {
  const ResolvedPlant rp = resolve(opt.source);
  const MlpPolicy policy = load_checked_policy(opt.policy_path, rp.plant);
  std::string grid_text = opt.grid;
  if (grid_text.empty()) {
    if (!rp.env) throw ParseError("need --grid when using a plant file");
    grid_text = default_grid(rp.env->name);
  }
  const GridSpec grid = parse_grid_spec(grid_text, rp.state_names);
  json config = {{"command", "roa-grid"},
                 {"source", rp.provenance},
                 {"policy_hash", git_blob_hash_file(opt.policy_path)},
                 {"grid", grid_text},
                 {"horizon", opt.horizon},
                 {"tol", opt.tol}};
  if (!opt.certificate_path.empty()) {
    config["certificate_hash"] = git_blob_hash_file(opt.certificate_path);
  }
  const std::string hash = config_hash(config);

  const RoaGridReport report = empirical_roa(rp.plant, policy, grid, opt.horizon, opt.tol);
  std::vector<std::string> slice;
  for (const auto& a : grid.axes) slice.push_back(rp.state_names[static_cast<std::size_t>(a.state_index)]);
  json j = {{"grid", grid_text},
            {"slice_axes", slice},
            {"points", report.size()},
            {"converged", report.converged_count()},
            {"horizon", report.horizon},
            {"tol", report.tol}};

  std::optional<Matrix> boundary;
  std::vector<std::string> boundary_names;
  if (!opt.certificate_path.empty()) {
    std::ifstream in(opt.certificate_path);
    if (!in) throw ParseError("cannot open certificate " + opt.certificate_path);
    json cj;
    in >> cj;
    if (!cj.value("feasible", true) || !cj.contains("P")) {
      throw ParseError("certificate " + opt.certificate_path + " holds no feasible P");
    }
    Ellipsoid e{matrix_from_json(cj.at("P"), "certificate.P"), Vector::Zero(rp.plant.state_dim())};
    if (cj.contains("x_star")) e.center = vector_from_json(cj.at("x_star"), "certificate.x_star");
    if (e.p.rows() != rp.plant.state_dim()) throw ContractViolation("certificate P does not match the plant");
    const auto bad = soundness_audit(e, report);
    std::size_t inside = 0;
    for (std::size_t k = 0; k < report.size(); ++k) {
      inside += e.contains(report.points.col(static_cast<Eigen::Index>(k))) ? 1 : 0;
    }
    j["inside_ellipsoid"] = inside;
    j["soundness_violations"] = bad;
    j["volume_proxy"] = volume_proxy(e);
    if (grid.axes.size() >= 2) {
      boundary = ellipse_boundary(e, grid.axes[0].state_index, grid.axes[1].state_index);
      boundary_names = {slice[0], slice[1]};
    }
  }
  j["config_hash"] = hash;
  if (!opt.out.empty()) {
    ensure_dir(opt.out);
    std::ostringstream csv;
    csv << hash_line(hash);
    write_roa_csv(csv, report, rp.state_names);
    write_text(fs::path(opt.out) / "roa_grid.csv", csv.str());
    if (boundary) {
      std::ostringstream b;
      b << hash_line(hash);
      write_boundary_csv(b, *boundary, boundary_names);
      write_text(fs::path(opt.out) / "ellipse_boundary.csv", b.str());
    }
    write_json(fs::path(opt.out) / "roa.json", j);
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_report(const ReportOptions& opt, std::ostream& out) {
  if (opt.run_dir.empty()) throw ParseError("need --out DIR pointing at a run directory");
  const fs::path dir = opt.run_dir;
  if (!fs::is_directory(dir)) throw ParseError("run directory " + dir.string() + " does not exist");

  json inputs = json::object();
  for (const char* name : {"curve.csv", "trajectory.csv", "frontier.csv", "roa_grid.csv",
                           "ellipse_boundary.csv"}) {
    if (fs::exists(dir / name)) inputs[name] = git_blob_hash_file(dir / name);
  }
  const std::string hash = config_hash(json{{"command", "report"}, {"inputs", inputs}});

  std::vector<Panel> panels(4);
  panels[0] = {"(a) learning curve", "environment steps", "evaluation return", {}, "curve.csv missing"};
  if (auto t = read_csv(dir / "curve.csv")) {
    const auto x = t->values(t->column("env_steps"));
    panels[0].series.push_back({"min", x, t->values(t->column("min")), "#9ecae1"});
    panels[0].series.push_back({"max", x, t->values(t->column("max")), "#6baed6"});
    panels[0].series.push_back({"mean", x, t->values(t->column("mean")), "#08519c"});
  }
  panels[1] = {"(b) evaluation trajectory", "step k", "state", {}, "trajectory.csv missing"};
  if (auto t = read_csv(dir / "trajectory.csv")) {
    static const char* colors[] = {"#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
    const auto k = t->values(0);
    int c = 0;
    for (std::size_t i = 1; i < t->header.size(); ++i) {
      const auto& name = t->header[i];
      if (name.rfind('u', 0) == 0 || name == "reward") continue;
      panels[1].series.push_back({name, k, t->values(static_cast<int>(i)), colors[c++ % 5]});
    }
  }
  panels[2] = {"(c) feasibility frontier", "mu", "LMI feasible (1) / infeasible (0)", {}, "frontier.csv missing"};
  if (auto t = read_csv(dir / "frontier.csv")) {
    Series s{"bisection", t->values(0), t->values(1), "#ff7f0e", true, 3.0};
    panels[2].series.push_back(s);
  }
  panels[3] = {"(d) region of attraction", "", "", {}, "roa_grid.csv missing"};
  if (auto t = read_csv(dir / "roa_grid.csv")) {
    // Plot the first two varying coordinates.
    std::vector<int> cols;
    for (std::size_t i = 0; i + 1 < t->header.size() && cols.size() < 2; ++i) {
      const auto v = t->values(static_cast<int>(i));
      if (!v.empty() && *std::max_element(v.begin(), v.end()) > *std::min_element(v.begin(), v.end())) {
        cols.push_back(static_cast<int>(i));
      }
    }
    if (cols.size() == 2) {
      const int conv = t->column("converged");
      Series ok{"converged", {}, {}, "#2ca02c", true, 0.8};
      Series bad{"not converged", {}, {}, "#bbbbbb", true, 0.8};
      for (const auto& r : t->rows) {
        Series& dst = r[static_cast<std::size_t>(conv)] > 0.5 ? ok : bad;
        dst.x.push_back(r[static_cast<std::size_t>(cols[0])]);
        dst.y.push_back(r[static_cast<std::size_t>(cols[1])]);
      }
      panels[3].xlabel = t->header[static_cast<std::size_t>(cols[0])];
      panels[3].ylabel = t->header[static_cast<std::size_t>(cols[1])];
      panels[3].series.push_back(ok);
      if (!bad.x.empty()) panels[3].series.push_back(bad);
      if (auto b = read_csv(dir / "ellipse_boundary.csv")) {
        auto bx = b->values(0);
        auto by = b->values(1);
        if (!bx.empty()) {
          bx.push_back(bx.front());
          by.push_back(by.front());
        }
        panels[3].series.push_back({"certified ellipse", bx, by, "#d62728"});
      }
    }
  }
  const std::string svg = render_svg(panels, 2, "config_hash=" + hash);
  write_text(dir / "report.svg", svg);
  out << json({{"report", (dir / "report.svg").string()}, {"config_hash", hash}, {"inputs", inputs}}).dump(2)
      << '\n';
  return kExitOk;
}

}  // namespace sncert::cli
