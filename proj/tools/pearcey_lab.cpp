// pearcey_lab: tabulate Pearcey functions, generating functions, residue
// data, verification residuals and occupancy probabilities.
//
// Exit codes: 0 ok, 1 verification failure, 2 invalid input, 3 numerical
// failure (precision loss, under-resolution, non-positive determinant).

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pearcey/pearcey.hpp"

namespace {

using namespace pearcey;
using ojson = nlohmann::ordered_json;

struct Range {
  double lo = 0.0, hi = 0.0;
  int n = 1;

  std::vector<double> values() const {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return v;
  }
};

Range parse_range(const std::string& text, const char* flag) {
  Range r;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%d%c", &r.lo, &r.hi, &r.n, &tail) != 3 || r.n < 1 || !(r.lo <= r.hi))
    fail(ErrorKind::invalid_argument, std::string(flag) + " expects lo:hi:n with lo <= hi and n >= 1");
  if (r.n == 1 && r.lo != r.hi) fail(ErrorKind::invalid_argument, std::string(flag) + ": n = 1 needs lo == hi");
  return r;
}

struct Options {
  std::string config_path;
  std::string s_grid, tau_grid;
  std::string out;
  std::string format = "csv";
  std::optional<int> panels, nodes_per_panel;
  std::optional<double> truncation;
  double fd_step = 1e-2;
  bool branch_flip = false;
  std::string suite = "all";
  int max_m = 12;
  double rho = 0.5;
  int circle_nodes = 32;
};

// ---------------------------------------------------------------------------
// grids

Grid make_grid(const Options& o, double tau_max, double s_max) {
  ContourSpec spec = build_contours(tau_max, s_max, 1e-16);
  const double R = o.truncation.value_or(spec.truncation());
  if (!(R > 0.0) || !std::isfinite(R)) fail(ErrorKind::invalid_argument, "--truncation must be positive");
  spec = make_contour_spec(R, SigmaOrientation::pearcey(), o.panels.value_or(spec.panels_per_ray),
                           o.nodes_per_panel.value_or(spec.nodes_per_panel));
  if (spec.panels_per_ray < 1 || spec.nodes_per_panel < 1)
    fail(ErrorKind::invalid_argument, "--panels and --nodes-per-panel must be positive");
  return discretize(spec);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_a(const ModelConfig& c) {
  double m = 0.0;
  for (double a : c.a) m = std::max(m, std::abs(a));
  return m;
}

// ---------------------------------------------------------------------------
// parallel map with deterministic output order

int thread_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("PEARCEY_LAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

template <class F>
std::vector<ojson> parallel_rows(std::size_t count, F&& row) {
  std::vector<ojson> out(count);
  std::vector<std::exception_ptr> errors(count);
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), count);
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < count; i += workers) {
      try {
        out[i] = row(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---------------------------------------------------------------------------
// output

std::string format_cell(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  if (v.is_null()) return "";
  return v.dump();
}

void emit(const Options& o, const std::vector<ojson>& rows) {
  std::ostringstream ss;
  if (o.format == "json") {
    ojson arr = ojson::array();
    for (const auto& r : rows) arr.push_back(r);
    ss << arr.dump(2) << "\n";
  } else {
    if (!rows.empty()) {
      bool first = true;
      for (auto it = rows.front().begin(); it != rows.front().end(); ++it) {
        ss << (first ? "" : ",") << it.key();
        first = false;
      }
      ss << "\n";
    }
    for (const auto& r : rows) {
      bool first = true;
      for (auto it = r.begin(); it != r.end(); ++it) {
        ss << (first ? "" : ",") << format_cell(*it);
        first = false;
      }
      ss << "\n";
    }
  }
  if (o.out.empty()) {
    std::cout << ss.str();
  } else {
    std::ofstream f(o.out);
    if (!f) fail(ErrorKind::invalid_argument, "cannot write " + o.out);
    f << ss.str();
  }
}

void stamp(ojson& row, const std::string& hash, const Grid& g) {
  row["config_hash"] = hash;
  row["panels_per_ray"] = g.spec.panels_per_ray;
  row["nodes_per_panel"] = g.spec.nodes_per_panel;
  row["truncation"] = g.spec.truncation();
  row["version"] = std::string(kVersion);
}

ModelConfig load_config(const Options& o) {
  if (o.config_path.empty()) fail(ErrorKind::invalid_argument, "--config is required for this command");
  // all-zero increments are a legitimate (trivial) input here: F = 1
  return read_config(o.config_path, ConfigMode::degenerate_allowed);
}

std::vector<double> s_values(const Options& o, double fallback) {
  return o.s_grid.empty() ? std::vector<double>{fallback} : parse_range(o.s_grid, "--s-grid").values();
}

std::vector<double> tau_values(const Options& o, double fallback) {
  return o.tau_grid.empty() ? std::vector<double>{fallback} : parse_range(o.tau_grid, "--tau-grid").values();
}

// ---------------------------------------------------------------------------
// commands

int cmd_special(const Options& o) {
  const auto ss = o.s_grid.empty() ? parse_range("-5:5:41", "--s-grid").values() : s_values(o, 0.0);
  const auto ts = tau_values(o, 0.0);
  const Grid g = make_grid(o, max_abs(ts), max_abs(ss));
  std::vector<std::pair<double, double>> pts;
  for (double t : ts)
    for (double s : ss) pts.emplace_back(s, t);
  auto rows = parallel_rows(pts.size(), [&](std::size_t i) {
    const auto [s, t] = pts[i];
    const auto q = pearcey_Q(s, t, g, 3);
    const auto p = pearcey_P(s, t, g, 3);
    ojson r;
    r["s"] = s;
    r["tau"] = t;
    for (int d = 0; d <= 3; ++d) r["Q" + std::to_string(d)] = q[d];
    for (int d = 0; d <= 3; ++d) r["P" + std::to_string(d)] = p[d];
    r["Q_asym"] = s > 0.0 ? ojson(asymptotic(s, t, Branch::Q)) : ojson();
    r["P_asym"] = s > 0.0 ? ojson(asymptotic(s, t, Branch::P)) : ojson();
    r["ode_residual_Q"] = ode_residual(q, Branch::Q);
    r["ode_residual_P"] = ode_residual(p, Branch::P);
    stamp(r, "", g);
    return r;
  });
  emit(o, rows);
  return 0;
}

int cmd_genfun(const Options& o) {
  const ModelConfig c = load_config(o);
  const auto ss = s_values(o, c.s);
  const auto ts = tau_values(o, c.tau);
  const Grid g = make_grid(o, max_abs(ts), max_abs(ss) + max_abs_a(c));
  std::vector<ModelConfig> pts;
  for (double t : ts)
    for (double s : ss) pts.push_back(c.with_s(s).with_tau(t));
  auto rows = parallel_rows(pts.size(), [&](std::size_t i) {
    const auto d = genfun_record(pts[i], g, o.branch_flip);
    ojson r;
    r["s"] = pts[i].s;
    r["tau"] = pts[i].tau;
    r["F"] = d.value;
    r["log_F"] = d.log_value;
    r["im_leak"] = d.im_leak;
    stamp(r, config_hash(pts[i]), g);
    return r;
  });
  emit(o, rows);
  return 0;
}

int cmd_gamma(const Options& o) {
  const ModelConfig c = load_config(o);
  const auto ss = s_values(o, c.s);
  const auto ts = tau_values(o, c.tau);
  const Grid g = make_grid(o, max_abs(ts), max_abs(ss) + max_abs_a(c));
  std::vector<ModelConfig> pts;
  for (double t : ts)
    for (double s : ss) pts.push_back(c.with_s(s).with_tau(t));
  auto rows = parallel_rows(pts.size(), [&](std::size_t i) {
    const Gamma1 gm = gamma1(pts[i], g, {.flip_branch = o.branch_flip});
    ojson r;
    r["s"] = pts[i].s;
    r["tau"] = pts[i].tau;
    if (o.format == "json") {
      r["delta"] = gm.delta;
      r["p"] = ojson::parse(to_json(gm.p).dump());
      r["q"] = ojson::parse(to_json(gm.q).dump());
      r["Delta"] = ojson::parse(to_json(gm.Delta).dump());
    } else {
      r["delta"] = gm.delta;
      r["ptq"] = gm.ptq().real();
      for (Eigen::Index k = 0; k < gm.p.size(); ++k) {
        const auto idx = std::to_string(k + 1);
        r["p" + idx + "_re"] = gm.p(k).real();
        r["p" + idx + "_im"] = gm.p(k).imag();
        r["q" + idx + "_re"] = gm.q(k).real();
        r["q" + idx + "_im"] = gm.q(k).imag();
      }
    }
    r["trace_residual"] = gm.trace_residual();
    stamp(r, config_hash(pts[i]), g);
    return r;
  });
  emit(o, rows);
  return 0;
}

int cmd_verify(const Options& o) {
  const ModelConfig c = load_config(o);
  VerifyOptions vo;
  vo.s_scheme.step = o.fd_step;
  vo.flip_branch = o.branch_flip;
  validate(vo.s_scheme);
  const Grid g = o.panels || o.nodes_per_panel || o.truncation
                     ? make_grid(o, std::abs(c.tau) + 0.5, c.max_abs_shift() + 1.0)
                     : verification_grid(c);
  std::vector<ResidualReport> reports;
  try {
    reports = run_suite(o.suite, c, g, vo);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) throw;
    fail(e.kind(), "suite " + o.suite + ": " + e.what());
  }
  std::vector<ojson> rows;
  bool ok = true;
  for (const auto& r : reports) {
    ojson row;
    row["identity"] = r.identity;
    row["s"] = r.s;
    row["tau"] = r.tau;
    row["residual"] = r.residual;
    row["scale"] = r.scale;
    row["relative"] = r.relative;
    row["tolerance"] = r.tolerance;
    row["pass"] = r.pass;
    stamp(row, r.config_hash, g);
    rows.push_back(row);
    ok = ok && r.pass;
  }
  emit(o, rows);
  return ok ? 0 : 1;
}

int cmd_occupancy(const Options& o) {
  const ModelConfig c = load_config(o);
  const Grid g = make_grid(o, std::abs(c.tau), c.max_abs_shift());
  const OccupancyTable table(c, g, o.rho, o.circle_nodes);
  if (o.max_m < 0 || o.max_m >= o.circle_nodes)
    fail(ErrorKind::invalid_argument, "--max-m must lie in [0, circle nodes)");
  const std::size_t dims = table.intervals();
  std::vector<int> m(dims, 0);
  std::vector<ojson> rows;
  const std::string hash = config_hash(c);
  while (true) {
    ojson r;
    for (std::size_t j = 0; j < dims; ++j) r["m" + std::to_string(j + 1)] = m[j];
    r["probability"] = table.probability(m);
    stamp(r, hash, g);
    rows.push_back(r);
    std::size_t j = 0;
    while (j < dims && ++m[j] > o.max_m) m[j++] = 0;
    if (j == dims) break;
  }
  emit(o, rows);
  return 0;
}

int cmd_scan(const Options& o) {
  const ModelConfig c = load_config(o);
  const auto ss = s_values(o, c.s);
  const auto ts = tau_values(o, c.tau);
  // room for the PDE stencils around each point
  const Grid g = make_grid(o, max_abs(ts) + 0.5, max_abs(ss) + max_abs_a(c) + 1.0);
  std::vector<ModelConfig> pts;
  for (double t : ts)
    for (double s : ss) pts.push_back(c.with_s(s).with_tau(t));
  VerifyOptions vo;
  vo.s_scheme.step = o.fd_step;
  validate(vo.s_scheme);
  auto rows = parallel_rows(pts.size(), [&](std::size_t i) {
    const auto sol = solve_rhp(pts[i], g, {.flip_branch = o.branch_flip});
    const auto pde = check_pde(pts[i], g, vo);
    ojson r;
    r["s"] = pts[i].s;
    r["tau"] = pts[i].tau;
    r["F"] = sol.det.real();
    r["delta"] = sol.gamma.delta;
    r["ptq"] = sol.gamma.ptq().real();
    r["pde_relative"] = pde.relative;
    stamp(r, config_hash(pts[i]), g);
    return r;
  });
  emit(o, rows);
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument:
    case ErrorKind::cost_guard: return 2;
    default: return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pearcey process generating functions and integrable-structure checks"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", o.config_path, "model configuration (JSON)");
    if (needs_config) cfg->required();
    sub->add_option("--s-grid", o.s_grid, "s range lo:hi:n");
    sub->add_option("--tau-grid", o.tau_grid, "tau range lo:hi:n");
    sub->add_option("--out", o.out, "output file (default stdout)");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--panels", o.panels, "panels per ray");
    sub->add_option("--nodes-per-panel", o.nodes_per_panel, "Gauss-Legendre nodes per panel");
    sub->add_option("--truncation", o.truncation, "contour truncation radius");
    sub->add_option("--fd-step", o.fd_step, "finite-difference step in s");
    sub->add_flag("--branch-flip", o.branch_flip, "use the other square-root branch for negative increments");
  };

  auto* special = app.add_subcommand("special", "tabulate Q, P, derivatives and asymptotics");
  common(special, false);
  auto* genfun_cmd = app.add_subcommand("genfun", "generating function F and log F");
  common(genfun_cmd, true);
  auto* gamma_cmd = app.add_subcommand("gamma", "residue data delta, p, q, Delta");
  common(gamma_cmd, true);
  auto* verify = app.add_subcommand("verify", "run identity checks");
  common(verify, true);
  verify->add_option("--suite", o.suite, "ode3, heat, pde, tw, delta, tau-id, asym or all")
      ->check(CLI::IsMember(suite_names()));
  auto* occ = app.add_subcommand("occupancy", "joint occupancy probabilities");
  common(occ, true);
  occ->add_option("--max-m", o.max_m, "largest occupancy number per interval");
  occ->add_option("--rho", o.rho, "Cauchy circle radius");
  occ->add_option("--circle-nodes", o.circle_nodes, "trapezoid nodes per circle");
  auto* scan = app.add_subcommand("scan", "F, delta, p^T q and PDE residual over (s, tau)");
  common(scan, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*special) return cmd_special(o);
    if (*genfun_cmd) return cmd_genfun(o);
    if (*gamma_cmd) return cmd_gamma(o);
    if (*verify) return cmd_verify(o);
    if (*occ) return cmd_occupancy(o);
    if (*scan) return cmd_scan(o);
  } catch (const Error& e) {
    std::cerr << "pearcey_lab: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "pearcey_lab: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
