#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <nsdp/invariants.hpp>
#include <nsdp/problems.hpp>

namespace nsdp::cli {

using nlohmann::json;

int exit_code(TerminationClass tc) {
  switch (tc) {
    case TerminationClass::KKT:
      return 0;
    case TerminationClass::FeasibleCQFail:
      return 2;
    case TerminationClass::InfeasibleStationaryKKTShifted:
      return 3;
    case TerminationClass::InfeasibleStationaryCQFailShifted:
      return 4;
    case TerminationClass::MaxIter:
      return 5;
    case TerminationClass::NumericalFailure:
      return 1;
  }
  return 1;
}

// ------------------------------------------------------------------- json

namespace {

json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json block_json(const BlockSymMatrix& m) {
  json blocks = json::array();
  for (const auto& b : m.blocks()) {
    json rows = json::array();
    for (std::size_t i = 0; i < b.order(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < b.order(); ++j) row.push_back(b(i, j));
      rows.push_back(std::move(row));
    }
    blocks.push_back(std::move(rows));
  }
  return blocks;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json record_json(const IterationRecord& r) {
  return {
      {"k", r.k},
      {"rho", r.rho},
      {"x", vec_json(r.x)},
      {"norm_d", r.norm_d},
      {"lv_dfea", r.lv_dfea},
      {"v", r.v},
      {"f", r.f},
      {"alpha", opt_json(r.alpha)},
      {"r_fea", r.r_fea},
      {"r_opt", r.r_opt},
      {"rho_after_update", r.rho_after_update},
      {"norm_dfea", r.norm_dfea},
      {"lv_d", r.lv_d},
      {"dl_v_d", r.dl_v_d},
      {"dl_v_dfea", r.dl_v_dfea},
      {"dl_rho_next", r.dl_rho_next},
      {"zeta", opt_json(r.zeta)},
      {"mu_bar_inf", r.mu_bar_inf},
      {"tr_y_bar", r.tr_y_bar},
      {"lmin_y_bar", r.lmin_y_bar},
      {"mu_hat_inf", r.mu_hat_inf},
      {"tr_y_hat", r.tr_y_hat},
      {"lmin_y_hat", r.lmin_y_hat},
      {"fea_status", std::string(to_string(r.fea_status))},
      {"fea_kkt", r.fea_kkt},
      {"fea_kkt_scale", r.fea_kkt_scale},
      {"fea_iterations", r.fea_iterations},
      {"dir_status", std::string(to_string(r.dir_status))},
      {"dir_kkt", r.dir_kkt},
      {"dir_kkt_scale", r.dir_kkt_scale},
      {"dir_iterations", r.dir_iterations},
      {"dir_margin", r.dir_margin},
      {"ls_trials", r.ls_trials},
      {"b_eig_min", r.b_eig_min},
      {"b_eig_max", r.b_eig_max},
  };
}

}  // namespace

json to_json(const SolverConfig& c) {
  return {
      {"eps", c.eps},
      {"delta", c.delta},
      {"eta", c.eta},
      {"gamma", c.gamma},
      {"rho0", c.rho0},
      {"nmax", c.nmax},
      {"tol_step", c.tol_step},
      {"tol_viol", c.tol_viol},
      {"bfea_scale", c.bfea_scale},
      {"bfgs_floor", c.bfgs_floor},
      {"b_min", c.b_min},
      {"b_max", c.b_max},
      {"rho_floor_class", c.rho_floor_class},
      {"alpha_min", c.alpha_min},
      {"direction_t_margin", c.direction_t_margin},
      {"direction_t_margin_max", c.direction_t_margin_max},
      {"subsolver_accept_tol", c.subsolver_accept_tol},
      {"bfgs_scaled_multipliers", c.bfgs_scaled_multipliers},
      {"subsolver",
       {{"tol_kkt", c.subsolver.tol_kkt},
        {"max_iter", c.subsolver.max_iter},
        {"step_fraction", c.subsolver.step_fraction},
        {"initial_slack", c.subsolver.initial_slack}}},
  };
}

json to_json(const SolveReport& rep) {
  json records = json::array();
  for (const auto& r : rep.records) records.push_back(record_json(r));
  const auto& m = rep.final_multipliers;
  return {
      {"problem", rep.problem},
      {"x0", vec_json(rep.x0)},
      {"config", to_json(rep.config)},
      {"records", std::move(records)},
      {"termination", std::string(to_string(rep.termination))},
      {"exit_code", exit_code(rep.termination)},
      {"message", rep.message},
      {"wall_time", rep.wall_time},
      {"final",
       {{"x", vec_json(rep.final_x)},
        {"v", rep.final_v},
        {"f", rep.final_f},
        {"rho", rep.final_rho},
        {"r", vec_json(rep.final_r)},
        {"s", vec_json(rep.final_s)},
        {"t", rep.final_t},
        {"multipliers",
         {{"mu_bar", vec_json(m.mu_bar)},
          {"y_bar", block_json(m.y_bar)},
          {"mu_hat", vec_json(m.mu_hat)},
          {"y_hat", block_json(m.y_hat)}}}}},
  };
}

// ------------------------------------------------------------ table / csv

namespace {

std::string fx(double v) { return fmt::format("{:.4f}", v); }
std::string sci(double v) { return fmt::format("{:.4e}", v); }

std::string x_cell(const Eigen::VectorXd& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) s += ',';
    s += fx(x(i));
  }
  return s + ")";
}

}  // namespace

void write_table(const SolveReport& rep, std::ostream& out) {
  std::size_t xw = 8;
  for (const auto& r : rep.records) xw = std::max(xw, x_cell(r.x).size());
  out << fmt::format("{:>4} {:>10} {:<{}} {:>11} {:>10} {:>10} {:>12} {:>11} {:>11} {:>11}\n", "k",
                     "rho", "x", xw, "|d|", "lv(dfea)", "v", "f", "alpha", "R_fea", "R_opt");
  for (const auto& r : rep.records) {
    out << fmt::format("{:>4} {:>10} {:<{}} {:>11} {:>10} {:>10} {:>12} {:>11} {:>11} {:>11}\n", r.k,
                       fx(r.rho), x_cell(r.x), xw, sci(r.norm_d), fx(r.lv_dfea), fx(r.v), fx(r.f),
                       r.alpha ? sci(*r.alpha) : std::string("-"), sci(r.r_fea), sci(r.r_opt));
  }
  out << "\n";
  out << "problem      " << rep.problem << "\n";
  out << "termination  " << to_string(rep.termination) << "  (" << rep.message << ")\n";
  out << "iterations   " << rep.records.size() << "\n";
  out << "x*           " << x_cell(rep.final_x) << "\n";
  out << "v*           " << fx(rep.final_v) << "  (" << sci(rep.final_v) << ")\n";
  out << "f*           " << fx(rep.final_f) << "\n";
  out << "rho*         " << fx(rep.final_rho) << "  (" << sci(rep.final_rho) << ")\n";
  out << "time         " << fmt::format("{:.3f}", rep.wall_time) << " s\n";
}

void write_csv(const SolveReport& rep, std::ostream& out) {
  const auto n = rep.x0.size();
  out << "k,rho";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i + 1;
  out << ",norm_d,lv_dfea,v,f,alpha,r_fea,r_opt\n";
  for (const auto& r : rep.records) {
    out << r.k << ',' << fx(r.rho);
    for (Eigen::Index i = 0; i < r.x.size(); ++i) out << ',' << fx(r.x(i));
    out << ',' << sci(r.norm_d) << ',' << fx(r.lv_dfea) << ',' << fx(r.v) << ',' << fx(r.f) << ','
        << (r.alpha ? sci(*r.alpha) : std::string()) << ',' << sci(r.r_fea) << ','
        << sci(r.r_opt) << '\n';
  }
}

void write_report(const SolveReport& rep, Format format, std::ostream& out) {
  switch (format) {
    case Format::Table:
      write_table(rep, out);
      break;
    case Format::Csv:
      write_csv(rep, out);
      break;
    case Format::Json:
      out << to_json(rep).dump(2) << "\n";
      break;
  }
}

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("not a number: '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw std::invalid_argument("not a number: '" + item + "'");
    vals.push_back(v);
  }
  if (vals.empty()) throw std::invalid_argument("empty vector");
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::vector<ParsedRow> parse_table(std::istream& in) {
  std::vector<ParsedRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;  // header
  while (std::getline(in, line) && !line.empty()) {
    std::istringstream ls(line);
    ParsedRow r;
    std::string x, alpha;
    if (!(ls >> r.k >> r.rho >> x >> r.norm_d >> r.lv_dfea >> r.v >> r.f >> alpha >> r.r_fea >>
          r.r_opt))
      throw std::runtime_error("malformed table row: " + line);
    if (x.size() < 2 || x.front() != '(' || x.back() != ')')
      throw std::runtime_error("malformed x cell: " + x);
    r.x = parse_vector(x.substr(1, x.size() - 2));
    if (alpha != "-") r.alpha = std::stod(alpha);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ParsedRow> parse_csv(std::istream& in) {
  std::vector<ParsedRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  const auto ncols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  const std::size_t n = ncols - 9;
  while (std::getline(in, line) && !line.empty()) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != ncols) throw std::runtime_error("malformed csv row: " + line);
    ParsedRow r;
    std::size_t i = 0;
    r.k = std::stoi(cells[i++]);
    r.rho = std::stod(cells[i++]);
    r.x.resize(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) r.x(static_cast<Eigen::Index>(j)) = std::stod(cells[i++]);
    r.norm_d = std::stod(cells[i++]);
    r.lv_dfea = std::stod(cells[i++]);
    r.v = std::stod(cells[i++]);
    r.f = std::stod(cells[i++]);
    if (!cells[i].empty()) r.alpha = std::stod(cells[i]);
    ++i;
    r.r_fea = std::stod(cells[i++]);
    r.r_opt = std::stod(cells[i++]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// --------------------------------------------------------------- commands

namespace {

struct Overrides {
  std::optional<int> max_iters;
  std::optional<double> rho0, eps, delta, eta, gamma, tol_step, tol_viol;
  std::optional<long> seed;  // reserved; the solver is deterministic

  void add_to(CLI::App* app) {
    app->add_option("--max-iters", max_iters, "Outer iteration cap");
    app->add_option("--rho0", rho0, "Initial penalty parameter");
    app->add_option("--eps", eps, "Penalty reduction test factor");
    app->add_option("--delta", delta, "Penalty decrease factor");
    app->add_option("--eta", eta, "Armijo constant");
    app->add_option("--gamma", gamma, "Backtracking factor");
    app->add_option("--tol-step", tol_step, "Stop when |d| is below this");
    app->add_option("--tol-viol", tol_viol, "Feasibility threshold for classification");
    app->add_option("--seed", seed, "Reserved (unused)");
  }

  SolverConfig apply(SolverConfig c) const {
    if (max_iters) c.nmax = *max_iters;
    if (rho0) c.rho0 = *rho0;
    if (eps) c.eps = *eps;
    if (delta) c.delta = *delta;
    if (eta) c.eta = *eta;
    if (gamma) c.gamma = *gamma;
    if (tol_step) c.tol_step = *tol_step;
    if (tol_viol) c.tol_viol = *tol_viol;
    c.validate();
    return c;
  }
};

const std::map<std::string, Format> kFormats{
    {"table", Format::Table}, {"csv", Format::Csv}, {"json", Format::Json}};

// Writes to --out when given, else to `out`.
template <class Fn>
void emit(const std::string& path, std::ostream& out, Fn&& fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open " + path);
  fn(file);
}

Eigen::VectorXd default_start(const NsdpProblem& p) {
  auto pts = p.initial_points();
  if (pts.empty()) throw std::invalid_argument("problem has no default start; pass --x0");
  return pts.front();
}

int cmd_run(const std::string& name, const std::string& x0_text, Format format,
            const std::string& path, const Overrides& ov, std::ostream& out) {
  auto problem = make_problem(name);
  const SolverConfig cfg = ov.apply({});
  Eigen::VectorXd x0 = x0_text.empty() ? default_start(*problem) : parse_vector(x0_text);
  if (static_cast<std::size_t>(x0.size()) != problem->num_vars())
    throw std::invalid_argument(fmt::format("--x0 has {} entries, {} expects {}", x0.size(),
                                            name, problem->num_vars()));
  const SolveReport rep = solve(*problem, x0, cfg);
  emit(path, out, [&](std::ostream& o) { write_report(rep, format, o); });
  return exit_code(rep.termination);
}

struct CaseResult {
  SolveReport report;
  CaseVerdict verdict;
  InvariantReport invariants;
};

int cmd_regress(const std::string& only, Format format, const std::string& path, int jobs,
                const Overrides& ov, std::ostream& out) {
  const SolverConfig cfg = ov.apply({});
  std::vector<Case> cases;
  for (auto& c : list_cases())
    if (only.empty() || c.problem == only) cases.push_back(std::move(c));
  if (cases.empty()) throw std::invalid_argument("no cases match '" + only + "'");

  std::vector<CaseResult> results(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < cases.size();) {
      auto problem = make_problem(cases[i].problem);
      auto& r = results[i];
      r.report = solve(*problem, cases[i].x0, cfg);
      r.verdict = check_outcome(r.report, cases[i].expected);
      r.invariants = check_invariants(*problem, r.report);
    }
  };
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min<int>(jobs, static_cast<int>(cases.size()));
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  bool all_ok = true;
  int hard_total = 0, hard_pass = 0;
  std::map<std::string, std::pair<int, int>> groups;  // passed, total
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& ex = cases[i].expected;
    const auto& r = results[i];
    if (ex.hard) {
      ++hard_total;
      hard_pass += r.verdict.pass;
      all_ok &= r.verdict.pass;
    }
    if (!ex.group.empty()) {
      auto& g = groups[ex.group];
      g.first += r.verdict.pass;
      ++g.second;
    }
    all_ok &= r.invariants.ok();
  }
  json group_json = json::array();
  for (const auto& q : group_quotas()) {
    auto it = groups.find(q.group);
    if (it == groups.end()) continue;
    const bool ok = it->second.first >= q.min_pass;
    all_ok &= ok;
    group_json.push_back({{"group", q.group},
                          {"passed", it->second.first},
                          {"total", it->second.second},
                          {"min_pass", q.min_pass},
                          {"pass", ok}});
  }

  emit(path, out, [&](std::ostream& o) {
    if (format == Format::Json) {
      json cj = json::array();
      for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& r = results[i];
        json viol = json::array();
        for (const auto& [kind, v] : r.invariants.violations)
          viol.push_back({{"kind", std::string(to_string(kind))}, {"k", v.k}, {"what", v.what}});
        cj.push_back({{"label", cases[i].label()},
                      {"problem", cases[i].problem},
                      {"x0", vec_json(cases[i].x0)},
                      {"hard", cases[i].expected.hard},
                      {"group", cases[i].expected.group},
                      {"source", cases[i].expected.source},
                      {"termination", std::string(to_string(r.report.termination))},
                      {"iterations", r.report.records.size()},
                      {"x", vec_json(r.report.final_x)},
                      {"v", r.report.final_v},
                      {"f", r.report.final_f},
                      {"rho", r.report.final_rho},
                      {"wall_time", r.report.wall_time},
                      {"pass", r.verdict.pass},
                      {"failures", r.verdict.failures},
                      {"invariants_ok", r.invariants.ok()},
                      {"invariant_violations", std::move(viol)}});
      }
      o << json{{"cases", std::move(cj)},
                {"groups", group_json},
                {"hard_passed", hard_pass},
                {"hard_total", hard_total},
                {"pass", all_ok}}
               .dump(2)
        << "\n";
      return;
    }
    std::size_t lw = 4;
    for (const auto& c : cases) lw = std::max(lw, c.label().size());
    o << fmt::format("{:<{}} {:<34} {:>4} {:>11} {:>12} {:>5} {:>6} {:>10}\n", "case", lw,
                     "termination", "it", "v", "f", "kind", "result", "invariants");
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto& r = results[i];
      o << fmt::format("{:<{}} {:<34} {:>4} {:>11} {:>12} {:>5} {:>6} {:>10}\n", cases[i].label(),
                       lw, to_string(r.report.termination), r.report.records.size(),
                       sci(r.report.final_v), fx(r.report.final_f),
                       cases[i].expected.hard ? "hard" : "soft", r.verdict.pass ? "PASS" : "FAIL",
                       r.invariants.ok() ? "ok" : "VIOLATED");
      for (const auto& f : r.verdict.failures) o << "    - " << f << "\n";
      if (!r.invariants.ok()) o << r.invariants.summary();
    }
    o << "\n";
    for (const auto& g : group_json)
      o << fmt::format("group {:<20} {}/{} passed (need {}) {}\n", g["group"].get<std::string>(),
                       g["passed"].get<int>(), g["total"].get<int>(), g["min_pass"].get<int>(),
                       g["pass"].get<bool>() ? "PASS" : "FAIL");
    o << fmt::format("hard cases {}/{} passed\n", hard_pass, hard_total);
    o << "regress " << (all_ok ? "PASS" : "FAIL") << "\n";
  });
  return all_ok ? 0 : 1;
}

int cmd_check(const std::string& name, const std::string& x0_text, double step, double tol,
              std::ostream& out) {
  auto problem = make_problem(name);
  std::vector<Eigen::VectorXd> points;
  if (x0_text.empty())
    points = problem->initial_points();
  else
    points.push_back(parse_vector(x0_text));
  if (points.empty()) throw std::invalid_argument("problem has no default start; pass --x0");
  bool ok = true;
  out << fmt::format("{:<28} {:>11} {:>11} {:>11}  result\n", "x", "gradient", "jacobian_h", "dG");
  for (const auto& x : points) {
    if (static_cast<std::size_t>(x.size()) != problem->num_vars())
      throw std::invalid_argument("--x0 has the wrong length");
    const auto d = check_derivatives(*problem, x, step);
    const bool pass = d.max_error() <= tol;
    ok &= pass;
    out << fmt::format("{:<28} {:>11} {:>11} {:>11}  {}\n", x_cell(x), sci(d.gradient_error),
                       sci(d.jacobian_error), sci(d.dG_error), pass ? "PASS" : "FAIL");
  }
  return ok ? 0 : 1;
}

int cmd_list(Format format, std::ostream& out) {
  if (format == Format::Json) {
    json probs = json::array();
    for (const auto& n : problem_names()) {
      auto p = make_problem(n);
      probs.push_back({{"name", n},
                       {"num_vars", p->num_vars()},
                       {"num_equalities", p->num_equalities()},
                       {"block_dims", p->block_dims()}});
    }
    json cases = json::array();
    for (const auto& c : list_cases())
      cases.push_back({{"label", c.label()},
                       {"problem", c.problem},
                       {"x0", vec_json(c.x0)},
                       {"hard", c.expected.hard},
                       {"group", c.expected.group}});
    out << json{{"problems", probs}, {"cases", cases}}.dump(2) << "\n";
    return 0;
  }
  out << "problems:\n";
  for (const auto& n : problem_names()) {
    auto p = make_problem(n);
    std::string dims;
    for (auto d : p->block_dims()) dims += (dims.empty() ? "" : ",") + std::to_string(d);
    out << fmt::format("  {:<20} n={} l={} blocks=[{}]\n", n, p->num_vars(), p->num_equalities(),
                       dims);
  }
  out << "cases:\n";
  for (const auto& c : list_cases())
    out << fmt::format("  {:<44} {}{}\n", c.label(), c.expected.hard ? "hard" : "soft",
                       c.expected.group.empty() ? "" : "  group=" + c.expected.group);
  return 0;
}

}  // namespace

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Least-constraint-violation SQP for nonlinear semidefinite programs", "nsdp"};
  app.require_subcommand(1);

  std::string problem, x0, out_path, format_name = "table", only;
  Overrides ov;
  double step = 1e-6, tol = 1e-6;
  int jobs = 0;

  auto* run = app.add_subcommand("run", "Solve one problem and print the iteration table");
  run->add_option("problem", problem, "Problem name")->required();
  run->add_option("--x0", x0, "Start point, comma separated");
  run->add_option("--format", format_name, "table | csv | json")
      ->check(CLI::IsMember({"table", "csv", "json"}));
  run->add_option("--out", out_path, "Write the report here instead of stdout");
  ov.add_to(run);

  auto* regress = app.add_subcommand("regress", "Run the built-in case suite");
  regress->add_option("--only", only, "Restrict to one problem");
  regress->add_option("--format", format_name, "table | json")
      ->check(CLI::IsMember({"table", "json"}));
  regress->add_option("--out", out_path, "Write the report here instead of stdout");
  regress->add_option("--jobs", jobs, "Worker threads (0 = hardware)");
  ov.add_to(regress);

  auto* check = app.add_subcommand("check", "Finite-difference derivative check");
  check->add_option("problem", problem, "Problem name")->required();
  check->add_option("--x0", x0, "Point, comma separated (default: listed starts)");
  check->add_option("--step", step, "Central-difference step")->check(CLI::PositiveNumber);
  check->add_option("--tol", tol, "Maximum relative error")->check(CLI::PositiveNumber);

  auto* list = app.add_subcommand("list", "List problems and regression cases");
  list->add_option("--format", format_name, "table | json")
      ->check(CLI::IsMember({"table", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream so, se;
    const int code = app.exit(e, so, se);
    out << so.str();
    err << se.str();
    return code == 0 ? 0 : 1;
  }

  try {
    const Format format = kFormats.at(format_name);
    if (*run) return cmd_run(problem, x0, format, out_path, ov, out);
    if (*regress) return cmd_regress(only, format, out_path, jobs, ov, out);
    if (*check) return cmd_check(problem, x0, step, tol, out);
    if (*list) return cmd_list(format, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace nsdp::cli
