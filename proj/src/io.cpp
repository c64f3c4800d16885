#include <festoon/io.hpp>

#include <festoon/hull.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace festoon {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config handling
// ---------------------------------------------------------------------------

namespace {

std::vector<double> as_double_vector(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& x : j) out.push_back(x.get<double>());
  return out;
}

}  // namespace

void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dim") cfg.dim = value.get<int>();
      else if (key == "n") cfg.n = value.get<Index>();
      else if (key == "binomial") cfg.binomial = value.get<bool>();
      else if (key == "lambda") cfg.lambda = value.get<double>();
      else if (key == "grid") cfg.grid = as_double_vector(value);
      else if (key == "reps") cfg.reps = value.get<Index>();
      else if (key == "seed") { cfg.seed = value.get<std::uint64_t>(); cfg.seed_set = true; }
      else if (key == "workers") cfg.workers = value.get<int>();
      else if (key == "window_lengths") cfg.window_lengths = as_double_vector(value);
      else if (key == "h_max") cfg.h_max = value.get<double>();
      else if (key == "route") cfg.route = value.get<std::string>();
      else if (key == "functional") cfg.functional = value.get<std::string>();
      else if (key == "k") cfg.k = value.get<int>();
      else if (key == "failure_budget") cfg.failure_budget = value.get<double>();
      else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
      else throw ConfigError("unknown config key: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config value has the wrong type: " + std::string(e.what()));
  }
}

namespace {

ordered_json config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["command"] = cfg.command;
  j["dim"] = cfg.dim;
  j["n"] = cfg.n;
  j["binomial"] = cfg.binomial;
  j["lambda"] = cfg.lambda;
  j["grid"] = cfg.grid;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["window_lengths"] = cfg.window_lengths;
  j["h_max"] = cfg.h_max;
  j["route"] = cfg.route;
  j["functional"] = cfg.functional;
  j["k"] = cfg.k;
  j["failure_budget"] = cfg.failure_budget;
  j["out_dir"] = cfg.out_dir;
  return j;
}

}  // namespace

std::string config_json(const RunConfig& cfg) { return config_to_json(cfg).dump(); }

std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void validate_config(const RunConfig& cfg) {
  if (!cfg.seed_set)
    throw ConfigError("a master seed is required (--seed or config file); "
                      "runs are never time-seeded");
  if (cfg.dim < 2 || cfg.dim > 6) throw ConfigError("dim must be in [2, 6]");
  if (cfg.reps < 0) throw ConfigError("reps must be non-negative");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (cfg.failure_budget < 0.0 || cfg.failure_budget >= 1.0)
    throw ConfigError("failure_budget must lie in [0, 1)");
  if (cfg.out_dir.empty()) throw ConfigError("out_dir must not be empty");
  if (cfg.h_max <= 0.0) throw ConfigError("h_max must be positive");
  for (std::size_t i = 0; i + 1 < cfg.window_lengths.size(); ++i)
    if (!(cfg.window_lengths[i] < cfg.window_lengths[i + 1]))
      throw ConfigError("window_lengths must increase strictly");
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string write_csv(const Table& table, const std::string& dir) {
  if (table.name.empty() || table.columns.empty())
    throw ConfigError("table needs a name and at least one column");
  for (const auto& row : table.rows)
    if (row.size() != table.columns.size())
      throw ConfigError("table row arity mismatch in " + table.name);
  const std::string path = (fs::path(dir) / (table.name + ".csv")).string();
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      out << (c ? "," : "") << table.columns[c];
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c)
        out << (c ? "," : "") << format_double(row[c]);
      out << "\n";
    }
  }
  // Round-trip validation: %.17g must reproduce every value exactly.
  const Table back = read_csv(path);
  if (back.columns != table.columns ||
      back.rows.size() != table.rows.size())
    throw std::runtime_error("round-trip shape mismatch for " + path);
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      const double a = table.rows[r][c], b = back.rows[r][c];
      if (!(a == b || (std::isnan(a) && std::isnan(b))))
        throw std::runtime_error("round-trip value mismatch for " + path);
    }
  return path;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  Table table;
  table.name = fs::path(path).stem().string();
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) table.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str())
        throw std::runtime_error("non-numeric cell in " + path);
      row.push_back(v);
    }
    if (row.size() != table.columns.size())
      throw std::runtime_error("ragged row in " + path);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string write_sidecar(const RunConfig& cfg, const ReportBundle& bundle) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["command"] = cfg.command;
  {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    j["generated_at"] = buf;
  }
  const std::string cfg_text = config_json(cfg);
  j["config"] = config_to_json(cfg);
  {
    char hex[19];
    std::snprintf(hex, sizeof hex, "0x%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(cfg_text)));
    j["config_hash"] = hex;
  }
  j["tables"] = ordered_json::array();
  for (const auto& [name, path] : bundle.written)
    j["tables"].push_back({{"name", name}, {"path", path}});
  j["scalars"] = bundle.scalars;
  j["notes"] = bundle.notes;

  const std::string path =
      (fs::path(cfg.out_dir) / (cfg.command + "_run.json")).string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
  return path;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

void emit(ReportBundle& bundle, Table table, const RunConfig& cfg,
          std::ostream& out) {
  const std::string path = write_csv(table, cfg.out_dir);
  bundle.written.emplace_back(table.name, path);
  out << "wrote " << path << " (" << table.rows.size() << " rows)\n";
}

std::pair<StatKind, int> parse_functional(const std::string& f) {
  if (f == "volume") return {StatKind::HullVolume, 0};
  if (f.size() == 2 && (f[0] == 'f' || f[0] == 'v') && f[1] >= '0' &&
      f[1] <= '9') {
    const int k = f[1] - '0';
    return {f[0] == 'f' ? StatKind::FaceCount : StatKind::IntrinsicVolume, k};
  }
  throw ConfigError("unknown functional (want f<k>, v<k>, or volume): " + f);
}

int finish(const RunConfig& cfg, ReportBundle& bundle, std::ostream& out,
           int code) {
  const std::string sidecar = write_sidecar(cfg, bundle);
  out << "wrote " << sidecar << "\n";
  return code;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto [kind, k] = parse_functional(cfg.functional);
  std::vector<double> grid = cfg.grid;
  if (grid.empty())
    grid = {cfg.binomial ? static_cast<double>(cfg.n) : cfg.lambda};
  if (cfg.binomial && grid.front() < 3)
    throw ConfigError("binomial runs need --n >= 3 or a grid");
  const Index reps = cfg.reps > 0 ? cfg.reps : 200;

  TraceOptions opt;
  opt.dim = cfg.dim;
  opt.k = k;
  opt.poisson = !cfg.binomial;
  opt.workers = cfg.workers;
  const std::vector<TracePoint> trace =
      scaled_variance_trace(kind, grid, reps, cfg.seed, opt);

  ReportBundle bundle;
  Table t;
  t.name = "trace";
  t.columns = {"grid_value",      "scaled_mean",       "scaled_mean_se",
               "scaled_variance", "scaled_variance_se", "within_mc_variance",
               "replicates",      "failed"};
  Index failed_total = 0;
  for (const TracePoint& p : trace) {
    t.rows.push_back({p.grid_value, p.scaled_mean, p.scaled_mean_se,
                      p.scaled_variance, p.scaled_variance_se,
                      p.within_mc_variance, static_cast<double>(p.replicates),
                      static_cast<double>(p.failed)});
    failed_total += p.failed;
  }
  emit(bundle, t, cfg, out);

  if (kind == StatKind::HullVolume) {
    // Volume runs also get the expectation-ratio comparison.
    Table m;
    m.name = "volume_ratio";
    m.columns = {"lambda", "measured_ratio", "ratio_se", "predicted_ratio",
                 "gap"};
    for (const auto& p :
         mainexpect_check(cfg.dim, grid, reps, cfg.seed, opt))
      m.rows.push_back(
          {p.lambda, p.measured_ratio, p.ratio_se, p.predicted_ratio, p.gap});
    emit(bundle, m, cfg, out);
  }

  const double frac =
      static_cast<double>(failed_total) /
      (static_cast<double>(reps) * static_cast<double>(grid.size()));
  bundle.scalars["failed_fraction"] = frac;
  bundle.notes["model"] = cfg.binomial ? "binomial" : "poisson";
  if (frac > cfg.failure_budget) {
    out << "error: failed-replicate fraction " << frac
        << " exceeds budget " << cfg.failure_budget << "\n";
    return finish(cfg, bundle, out, kExitDegeneracy);
  }
  return finish(cfg, bundle, out, kExitOk);
}

int cmd_limit_model(const RunConfig& cfg, std::ostream& out) {
  const Index reps = cfg.reps > 0 ? cfg.reps : 2000;
  const EdNdResult ednd =
      ed_nd_estimator(cfg.window_lengths, reps, cfg.h_max, cfg.seed);

  ReportBundle bundle;
  Table t;
  t.name = "window_counts";
  t.columns = {"window_len", "mean_per_len", "mean_se",
               "var_per_len", "var_se",      "replicates"};
  for (const auto& p : ednd.trace)
    t.rows.push_back({p.window_len, p.mean_per_len, p.mean_se, p.var_per_len,
                      p.var_se, static_cast<double>(p.reps)});
  emit(bundle, t, cfg, out);

  const TailFit height = height_tail_fit(
      std::max<Index>(reps, 2000), 0.5 * cfg.window_lengths.back(), cfg.h_max,
      mix_stream_id({cfg.seed, 0x7A11}));
  Table h;
  h.name = "height_tail";
  h.columns = {"t", "loglog_inverse_survival"};
  for (std::size_t i = 0; i < height.t.size(); ++i)
    h.rows.push_back({height.t[i], height.transformed[i]});
  emit(bundle, h, cfg, out);

  // One large-window draw for the shock geometry listings.
  {
    LimitWindow window;
    window.dim_minus_1 = 1;
    window.half_width = 0.5 * cfg.window_lengths.back();
    window.h_max = cfg.h_max;
    RngStream rng(cfg.seed, mix_stream_id({0x5770c5ull}));
    const ShockLists shocks = shocks_2d(sample_limit_process(window, rng));
    Table ks;
    ks.name = "shock_kinks";
    ks.columns = {"v", "h", "spacing_to_next"};
    for (Index i = 0; i < shocks.kinks.cols(); ++i)
      ks.rows.push_back({shocks.kinks(0, i), shocks.kinks(1, i),
                         i < shocks.kink_spacings.size()
                             ? shocks.kink_spacings(i)
                             : 0.0});
    emit(bundle, ks, cfg, out);
    Table ap;
    ap.name = "shock_apices";
    ap.columns = {"v", "height", "spacing_to_next"};
    for (Index i = 0; i < shocks.apices.cols(); ++i)
      ap.rows.push_back({shocks.apices(0, i), shocks.apices(1, i),
                         i < shocks.apex_spacings.size()
                             ? shocks.apex_spacings(i)
                             : 0.0});
    emit(bundle, ap, cfg, out);
  }

  bundle.scalars["mean_count_per_len"] = ednd.e_d.value;
  bundle.scalars["mean_count_per_len_se"] = ednd.e_d.std_error;
  bundle.scalars["var_count_per_len"] = ednd.n_d.value;
  bundle.scalars["var_count_per_len_se"] = ednd.n_d.std_error;
  bundle.scalars["height_tail_slope"] = height.fit.slope;
  bundle.scalars["height_tail_correlation"] = height.fit.correlation;
  out << "extreme points per unit length: " << ednd.e_d.value << " +- "
      << ednd.e_d.std_error << "\n";
  out << "count variance per unit length: " << ednd.n_d.value << " +- "
      << ednd.n_d.std_error << "\n";
  return finish(cfg, bundle, out, kExitOk);
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  RouteOptions opt;
  opt.lambda = cfg.lambda;
  opt.seed = cfg.seed;
  opt.workers = cfg.workers;
  opt.h_max = cfg.h_max;
  opt.window_lengths = cfg.window_lengths;
  if (cfg.reps > 0) {
    opt.direct_reps = cfg.reps;
    opt.window_reps = cfg.reps;
    opt.sigma2.reps = std::max<Index>(cfg.reps, 2 * opt.sigma2.block_width);
  }

  ReportBundle bundle;
  bundle.notes["route_codes"] =
      "0: direct variance / R_lambda; 1: direct variance / sqrt(2 log "
      "lambda); 2: 2 pi x limit pair integral; 3: window-count variance per "
      "length; 4: route 3 x 2 pi";
  Table routes;
  routes.name = "routes";
  routes.columns = {"route",  "value", "std_error",
                    "ci_lo",  "ci_hi", "replicates",
                    "censored"};
  const auto add_route = [&routes](int id, const Estimate& e) {
    routes.rows.push_back({static_cast<double>(id), e.value, e.std_error,
                           e.ci_lo(), e.ci_hi(),
                           static_cast<double>(e.replicate_count),
                           static_cast<double>(e.censored_count)});
  };

  int code = kExitOk;
  if (cfg.route == "all") {
    const RouteEstimates r = route_consistency_check(opt);
    add_route(0, r.direct);
    add_route(1, {r.direct_literal,
                  r.direct.std_error * r.direct_literal /
                      std::max(r.direct.value, 1e-300),
                  r.direct.replicate_count, 0});
    add_route(2, r.via_limit);
    add_route(3, r.via_window);
    add_route(4, r.via_window_scaled);

    Table s2;
    s2.name = "sigma2";
    s2.columns = {"total",   "total_se", "term1",          "term1_se",
                  "term2",   "term2_se", "shell_fraction", "replicates"};
    s2.rows.push_back({r.sigma2.total.value, r.sigma2.total.std_error,
                       r.sigma2.term1, r.sigma2.term1_se, r.sigma2.term2,
                       r.sigma2.term2_se, r.sigma2.shell_fraction,
                       static_cast<double>(r.sigma2.reps)});
    emit(bundle, s2, cfg, out);

    Table wc;
    wc.name = "window_counts";
    wc.columns = {"window_len", "mean_per_len", "mean_se",
                  "var_per_len", "var_se",      "replicates"};
    for (const auto& p : r.window_detail.trace)
      wc.rows.push_back({p.window_len, p.mean_per_len, p.mean_se,
                         p.var_per_len, p.var_se,
                         static_cast<double>(p.reps)});
    emit(bundle, wc, cfg, out);

    bundle.scalars["ab_overlap"] = r.ab_overlap ? 1.0 : 0.0;
    bundle.scalars["ac_overlap"] = r.ac_overlap ? 1.0 : 0.0;
    bundle.scalars["bc_overlap"] = r.bc_overlap ? 1.0 : 0.0;
    bundle.scalars["ac_scaled_overlap"] = r.ac_scaled_overlap ? 1.0 : 0.0;
    bundle.scalars["bc_scaled_overlap"] = r.bc_scaled_overlap ? 1.0 : 0.0;
    out << "direct (var f0 / R_lambda): " << r.direct.value << " +- "
        << r.direct.std_error << "\n";
    out << "limit  (2 pi x pair integral): " << r.via_limit.value << " +- "
        << r.via_limit.std_error << "\n";
    out << "window (count var per length): " << r.via_window.value << " +- "
        << r.via_window.std_error << " (x 2 pi: "
        << r.via_window_scaled.value << ")\n";
    out << "interval overlaps a-b " << r.ab_overlap << ", a-c "
        << r.ac_overlap << ", b-c " << r.bc_overlap << " (scaled c: a-c "
        << r.ac_scaled_overlap << ", b-c " << r.bc_scaled_overlap << ")\n";
    const double frac =
        static_cast<double>(r.direct.censored_count) /
        std::max<double>(1.0, static_cast<double>(opt.direct_reps));
    bundle.scalars["failed_fraction"] = frac;
    if (frac > cfg.failure_budget) {
      out << "error: failed-replicate fraction " << frac
          << " exceeds budget " << cfg.failure_budget << "\n";
      code = kExitDegeneracy;
    }
  } else if (cfg.route == "direct") {
    ReplicationPlan plan;
    plan.master_seed = opt.seed;
    plan.replicate_count = opt.direct_reps;
    plan.parameter_grid = {opt.lambda};
    plan.purpose_tag = 0x41;  // matches the combined-run direct route
    plan.dim = 2;
    plan.workers = opt.workers;
    const ReplicateFn fn = [](Index, Index, double lambda, RngStream& rng) {
      const double r_min = prune_radius(lambda, 2, 8.0);
      const PointCloud cloud =
          r_min > 0.0 ? sample_poisson_gaussian_shell(lambda, r_min, rng)
                      : sample_poisson_gaussian(lambda, 2, rng);
      const Polytope poly = convex_hull<double>(cloud);
      return std::vector<double>{static_cast<double>(poly.vertices.size())};
    };
    const ReplicationTable table = run_replications(plan, {"f0"}, fn);
    const std::vector<double> f0 = table.values_at(0, "f0");
    const double var = sample_variance(f0);
    const double se = variance_jackknife_se(f0);
    const double r_lambda = critical_radius(opt.lambda, 2);
    add_route(0, {var / r_lambda, se / r_lambda,
                  static_cast<Index>(f0.size()),
                  opt.direct_reps - static_cast<Index>(f0.size())});
    const double root = std::sqrt(2.0 * std::log(opt.lambda));
    add_route(1, {var / root, se / root, static_cast<Index>(f0.size()), 0});
    out << "direct (var f0 / R_lambda): " << var / r_lambda << " +- "
        << se / r_lambda << "\n";
  } else if (cfg.route == "limit") {
    Sigma2Options s2o = opt.sigma2;
    s2o.seed = mix_stream_id({opt.seed, 0xB});
    const Sigma2Result s2 = sigma2_estimator(s2o);
    add_route(2, {2.0 * M_PI * s2.total.value,
                  2.0 * M_PI * s2.total.std_error,
                  s2.total.replicate_count, 0});
    Table st;
    st.name = "sigma2";
    st.columns = {"total",   "total_se", "term1",          "term1_se",
                  "term2",   "term2_se", "shell_fraction", "replicates"};
    st.rows.push_back({s2.total.value, s2.total.std_error, s2.term1,
                       s2.term1_se, s2.term2, s2.term2_se, s2.shell_fraction,
                       static_cast<double>(s2.reps)});
    emit(bundle, st, cfg, out);
    out << "limit (2 pi x pair integral): " << 2.0 * M_PI * s2.total.value
        << " +- " << 2.0 * M_PI * s2.total.std_error << "\n";
  } else if (cfg.route == "window") {
    const EdNdResult ednd =
        ed_nd_estimator(opt.window_lengths, opt.window_reps, opt.h_max,
                        mix_stream_id({opt.seed, 0xC}));
    add_route(3, ednd.n_d);
    add_route(4, {2.0 * M_PI * ednd.n_d.value, 2.0 * M_PI * ednd.n_d.std_error,
                  ednd.n_d.replicate_count, 0});
    Table wc;
    wc.name = "window_counts";
    wc.columns = {"window_len", "mean_per_len", "mean_se",
                  "var_per_len", "var_se",      "replicates"};
    for (const auto& p : ednd.trace)
      wc.rows.push_back({p.window_len, p.mean_per_len, p.mean_se,
                         p.var_per_len, p.var_se,
                         static_cast<double>(p.reps)});
    emit(bundle, wc, cfg, out);
    out << "window (count var per length): " << ednd.n_d.value << " +- "
        << ednd.n_d.std_error << "\n";
  } else {
    throw ConfigError("unknown route (want all|direct|limit|window): " +
                      cfg.route);
  }
  emit(bundle, routes, cfg, out);
  return finish(cfg, bundle, out, code);
}

int cmd_diagnostics(const RunConfig& cfg, std::ostream& out) {
  std::vector<double> grid = cfg.grid;
  if (grid.empty()) grid = {1e4, 1e5, 1e6};
  const Index intensity_reps = cfg.reps > 0 ? cfg.reps : 40;

  ReportBundle bundle;
  {
    Table t;
    t.name = "intensity_fit";
    t.columns = {"lambda", "chi2", "dof", "pvalue", "points"};
    for (const auto& p :
         intensity_chi_square(grid, intensity_reps, cfg.dim, cfg.seed))
      t.rows.push_back({p.lambda, p.chi2, static_cast<double>(p.dof),
                        p.pvalue, static_cast<double>(p.total_points)});
    emit(bundle, t, cfg, out);
  }
  {
    Table t;
    t.name = "paraboloid_gap";
    t.columns = {"lambda", "h1", "sup_gap_times_r"};
    for (const auto& p : paralem_scan(grid, {-2.0, 0.0, 2.0}, 3.0, 201,
                                      std::min(cfg.dim, 3)))
      t.rows.push_back({p.lambda, p.h1, p.sup_gap_times_r});
    emit(bundle, t, cfg, out);
  }
  {
    const TailFit height =
        height_tail_fit(2000, 12.0, cfg.h_max, mix_stream_id({cfg.seed, 1}));
    Table t;
    t.name = "height_tail";
    t.columns = {"t", "loglog_inverse_survival"};
    for (std::size_t i = 0; i < height.t.size(); ++i)
      t.rows.push_back({height.t[i], height.transformed[i]});
    emit(bundle, t, cfg, out);
    bundle.scalars["height_tail_slope"] = height.fit.slope;
    bundle.scalars["height_tail_correlation"] = height.fit.correlation;
  }
  {
    Vecd r_grid(8);
    r_grid << 1, 2, 3, 4, 5, 6, 7, 8;
    // Extremity (k = 0) is monotone under point removal and face counts of
    // a one-dimensional chain are structurally constant, so the
    // stabilization radius is read off the geometry-sensitive
    // defect-volume score unless a face dimension is forced.
    const int radius_k = cfg.k >= 1 ? cfg.k : -1;
    const TailFit radius = radius_tail_fit(200, r_grid, 12.0, cfg.h_max,
                                           radius_k,
                                           mix_stream_id({cfg.seed, 2}));
    Table t;
    t.name = "radius_tail";
    t.columns = {"t_squared", "neg_log_survival"};
    for (std::size_t i = 0; i < radius.t.size(); ++i)
      t.rows.push_back({radius.t[i], radius.transformed[i]});
    emit(bundle, t, cfg, out);
    bundle.scalars["radius_tail_slope"] = radius.fit.slope;
    bundle.scalars["radius_tail_correlation"] = radius.fit.correlation;
  }
  {
    // Normality of window counts at the largest configured window.
    LimitWindow window;
    window.dim_minus_1 = 1;
    window.half_width = 0.5 * cfg.window_lengths.back();
    window.h_max = cfg.h_max;
    std::vector<double> counts;
    for (Index r = 0; r < 300; ++r) {
      RngStream rng(cfg.seed, mix_stream_id({0xD1A6ull,
                                             static_cast<std::uint64_t>(r)}));
      counts.push_back(static_cast<double>(
          extreme_points(sample_limit_process(window, rng)).size()));
    }
    const NormalityReport rep = normality_diagnostics(counts, 15);
    Table t;
    t.name = "count_normality";
    t.columns = {"z_lo", "z_hi", "count"};
    for (std::size_t b = 0; b + 1 < rep.bin_edges.size(); ++b)
      t.rows.push_back(
          {rep.bin_edges[b], rep.bin_edges[b + 1], rep.bin_counts[b]});
    emit(bundle, t, cfg, out);
    bundle.scalars["count_skewness"] = rep.skew;
    bundle.scalars["count_excess_kurtosis"] = rep.excess_kurtosis;
  }
  return finish(cfg, bundle, out, kExitOk);
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  ReportBundle bundle;
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(cfg.out_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      csvs.push_back(entry.path());
  std::sort(csvs.begin(), csvs.end());
  if (csvs.empty())
    throw ConfigError("report: no csv files under " + cfg.out_dir);

  Table t;
  t.name = "report_index";
  t.columns = {"rows", "cols", "content_hash_low32"};
  for (const auto& p : csvs) {
    const Table parsed = read_csv(p.string());  // validates shape + numbers
    std::ifstream raw(p);
    std::stringstream buf;
    buf << raw.rdbuf();
    const std::uint64_t hash = fnv1a_hash(buf.str());
    t.rows.push_back({static_cast<double>(parsed.rows.size()),
                      static_cast<double>(parsed.columns.size()),
                      static_cast<double>(hash & 0xffffffffull)});
    bundle.notes[p.filename().string()] =
        "rows=" + std::to_string(parsed.rows.size()) +
        " cols=" + std::to_string(parsed.columns.size());
    out << "validated " << p.string() << "\n";
  }
  emit(bundle, t, cfg, out);
  return finish(cfg, bundle, out, kExitOk);
}

}  // namespace

int run_command(const RunConfig& cfg, std::ostream& out) {
  try {
    validate_config(cfg);
    fs::create_directories(cfg.out_dir);
    out << "effective config: " << config_json(cfg) << "\n";
    if (cfg.command == "simulate") return cmd_simulate(cfg, out);
    if (cfg.command == "limit-model") return cmd_limit_model(cfg, out);
    if (cfg.command == "estimate") return cmd_estimate(cfg, out);
    if (cfg.command == "diagnostics") return cmd_diagnostics(cfg, out);
    if (cfg.command == "report") return cmd_report(cfg, out);
    throw ConfigError("unknown command: " + cfg.command);
  } catch (const TruncationDominates& e) {
    out << "error: truncation audit failed: " << e.what() << "\n";
    return kExitTruncation;
  } catch (const std::invalid_argument& e) {
    out << "error: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace festoon
