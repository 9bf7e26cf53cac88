// roundoff: command-line front end for the round-off dynamics library.
//
//   roundoff twist-table    --n 100,200 --b 0,0.3
//   roundoff period-profile --n 100 --points 100
//   roundoff distribution   --e 10000 --m 32 --lambda auto
//   roundoff phase-plot     --e 40309 --res 283x5163 --out plot
//   roundoff agreement      --r 5 --lambda 1/100,1/1000,1/10000
//
// Every subcommand writes its table to <out>.csv or <out>.json (stdout when
// --out is omitted) and a manifest to <out>.manifest.json. Outputs depend
// only on the arguments; wall time goes to stderr unless --timing is given.

#include <array>
#include <chrono>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "roundoff/experiments.hpp"

namespace {

using namespace roundoff;
using io::Json;

constexpr const char* kVersion = "1.0.0";

struct Common {
  std::string out;
  std::string format = "csv";
  unsigned threads = 1;
  std::uint64_t seed = 0;
  bool timing = false;
};

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<Rational> parse_list(const std::string& s) {
  std::vector<Rational> out;
  for (const auto& item : split(s)) out.push_back(parse_rational(item));
  return out;
}

Json rational_json(const Rational& x) { return Json{{"exact", to_string(x)}, {"decimal", to_double(x)}}; }

Json point_json(const Point64& z) { return Json::array({z.x, z.y}); }

Json manifest_base(const std::string& command, const Common& c) {
  Json m;
  m["tool"] = "roundoff";
  m["version"] = kVersion;
  m["gmp"] = gmp_version;
  m["command"] = command;
  m["threads"] = c.threads;
  m["seed"] = c.seed;
  return m;
}

// Emits the table (CSV text or JSON) to <out>.<format> or stdout, then the manifest.
void emit(const Common& c, const std::string& csv_text, const Json& json, Json manifest, double seconds) {
  if (c.timing) manifest["wall_seconds"] = seconds;
  std::cerr << "wall time: " << to_decimal(seconds) << " s\n";
  if (c.out.empty()) {
    if (c.format == "json")
      io::write_json(std::cout, json);
    else
      std::cout << csv_text;
    return;
  }
  if (c.format == "json") {
    auto os = io::open_output(c.out + ".json");
    io::write_json(os, json);
    manifest["outputs"].push_back(c.out + ".json");
  } else {
    auto os = io::open_output(c.out + ".csv", true);
    os << csv_text;
    manifest["outputs"].push_back(c.out + ".csv");
  }
  auto ms = io::open_output(c.out + ".manifest.json");
  io::write_json(ms, manifest);
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

void cmd_twist_table(const std::string& n_list, const std::string& b_list, const Common& c) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<long> ns;
  for (const auto& s : split(n_list)) ns.push_back(std::stol(s));
  auto rows = twist_table(ns, parse_list(b_list));
  std::ostringstream csv;
  io::CsvWriter w(csv);
  w.row({"n", "b", "e", "floor_sqrt_e", "T_prime", "T_prime_decimal", "kappa", "kappa_decimal", "rho_star",
         "rho_star_decimal"});
  Json table = Json::array();
  for (const auto& r : rows) {
    std::vector<std::string> f{std::to_string(r.n), to_string(r.b), to_string(r.cls.e.e), to_string(r.cls.n_full)};
    for (const auto* v : {&r.cls.t_prime, &r.cls.kappa}) {
      auto ed = io::exact_and_decimal(*v);
      f.insert(f.end(), ed.begin(), ed.end());
    }
    Json row{{"n", r.n},
             {"b", to_string(r.b)},
             {"e", to_string(r.cls.e.e)},
             {"floor_sqrt_e", to_string(r.cls.n_full)},
             {"T_prime", rational_json(r.cls.t_prime)},
             {"kappa", rational_json(r.cls.kappa)}};
    if (r.cls.rho_star_value) {
      auto ed = io::exact_and_decimal(*r.cls.rho_star_value);
      f.insert(f.end(), ed.begin(), ed.end());
      row["rho_star"] = rational_json(*r.cls.rho_star_value);
    } else {
      f.insert(f.end(), {"", ""});
      row["rho_star"] = nullptr;
    }
    w.row(f);
    table.push_back(row);
  }
  auto m = manifest_base("twist-table", c);
  m["n"] = ns;
  m["b"] = split(b_list);
  emit(c, csv.str(), table, m, since(t0));
}

void cmd_period_profile(long n, int points, const Common& c) {
  auto t0 = std::chrono::steady_clock::now();
  auto rows = period_profile(n, points);
  std::ostringstream csv;
  io::CsvWriter w(csv);
  w.row({"b", "alpha", "T", "T_decimal", "scaled_deviation", "asymptotic_profile"});
  Json table = Json::array();
  double worst = 0;
  for (const auto& r : rows) {
    w.row({to_string(r.b), to_string(r.alpha), to_string(r.period), to_decimal(r.period), to_decimal(r.scaled),
           to_decimal(r.profile)});
    table.push_back({{"b", to_string(r.b)},
                     {"alpha", to_string(r.alpha)},
                     {"T", rational_json(r.period)},
                     {"scaled_deviation", r.scaled},
                     {"asymptotic_profile", r.profile}});
    worst = std::max(worst, std::fabs(r.scaled - r.profile));
  }
  auto m = manifest_base("period-profile", c);
  m["n"] = n;
  m["points"] = points;
  m["max_abs_profile_error"] = worst;
  emit(c, csv.str(), table, m, since(t0));
}

void cmd_distribution(const DistributionConfig& cfg, const Common& c) {
  auto t0 = std::chrono::steady_clock::now();
  if (!is_square(cfg.e)) std::cerr << "warning: e is not a perfect square; the phase portrait need not be uniform\n";
  auto runs = run_distribution(cfg);
  auto gaps = summarize_gaps(runs);

  std::ostringstream csv;
  io::CsvWriter w(csv);
  std::vector<std::string> header{"x", "R"};
  for (std::size_t i = 0; i < runs.size(); ++i) header.push_back("D_run" + std::to_string(i));
  w.row(header);
  for (int k = 0; k < kDistributionGridPoints; ++k) {
    double x = runs.front().report.samples[k].first;
    std::vector<std::string> f{to_decimal(x), to_decimal(gamma_law(x))};
    for (const auto& r : runs) f.push_back(to_decimal(r.report.samples[k].second));
    w.row(f);
  }

  Json report;
  report["e"] = to_string(cfg.e);
  report["m"] = cfg.m;
  report["l1_gap"] = {{"min", gaps.min}, {"mean", gaps.mean}, {"max", gaps.max}};
  Json jruns = Json::array();
  for (const auto& r : runs) {
    jruns.push_back({{"lambda", rational_json(r.lambda)},
                     {"z0", point_json(r.z0)},
                     {"z0_residual", rational_json(r.z0_residual)},
                     {"count_A", r.count_A},
                     {"count_A_bar", r.stats.size},
                     {"g", r.stats.g},
                     {"h", r.stats.h},
                     {"h_over_g", static_cast<double>(r.stats.h) / static_cast<double>(r.stats.g)},
                     {"gamma", rational_json(r.report.gamma)},
                     {"l1_gap", r.report.l1_gap},
                     {"abs_l1_gap", r.report.abs_l1_gap},
                     {"symmetric_fraction", r.report.symmetric_fraction},
                     {"unresolved_seeds", r.stats.unresolved},
                     {"median_delta_rho", rational_json(r.excursions.median_rho_range)},
                     {"max_delta_rho", rational_json(r.excursions.max_rho_range)},
                     {"median_delta_nu", rational_json(r.excursions.median_nu_range)},
                     {"max_delta_nu", rational_json(r.excursions.max_nu_range)}});
  }
  report["runs"] = jruns;

  auto m = manifest_base("distribution", c);
  m["e"] = to_string(cfg.e);
  m["m"] = cfg.m;
  m["lambda"] = cfg.lambda ? to_string(*cfg.lambda) : "auto";
  m["period_cap"] = cfg.period_cap;
  Json cells = Json::array();
  for (const auto& r : runs)
    cells.push_back({{"lambda", to_string(r.lambda)}, {"z0", point_json(r.z0)}, {"unresolved", r.stats.unresolved}});
  m["cells"] = cells;

  if (!c.out.empty()) {
    // The JSON report always accompanies the distribution table.
    auto os = io::open_output(c.out + ".report.json");
    io::write_json(os, report);
    m["outputs"].push_back(c.out + ".report.json");
  }
  emit(c, csv.str(), report, m, since(t0));
}

void cmd_phase_plot(const PhasePlotConfig& cfg, const Common& c) {
  auto t0 = std::chrono::steady_clock::now();
  if (c.out.empty()) throw ContractViolation("phase-plot: --out is required");
  auto plot = phase_plot(cfg);
  {
    auto os = io::open_output(c.out + ".ppm", true);
    io::write_ppm(os, render(plot));
  }
  auto cls = PolygonClass::of(cfg.e);
  Integer two_s = 2 * cls.strip();
  Integer twice_x0 = 2 * to_integer(plot.z0.x);
  std::ostringstream csv;
  io::CsvWriter w(csv);
  w.row({"X", "Y", "theta", "rho"});
  for (const auto& z : plot.points) {
    w.row({std::to_string(z.x), std::to_string(z.y), to_string(make_rational(to_integer(z.x - z.y), two_s)),
           to_string(make_rational(to_integer(z.x + z.y) - twice_x0, two_s))});
  }
  auto m = manifest_base("phase-plot", c);
  m["e"] = to_string(cfg.e);
  m["lambda"] = to_string(plot.lambda);
  m["z0"] = point_json(plot.z0);
  m["rho_window"] = Json::array({to_string(plot.rho_lo), to_string(plot.rho_hi)});
  m["resolution"] = Json::array({plot.width, plot.height});
  m["orbit_cap"] = cfg.orbit_cap;
  m["seed_stride"] = cfg.seed_stride;
  m["seeds_fix_G"] = plot.seeds_g;
  m["seeds_fix_PhiG"] = plot.seeds_h;
  m["orbits"] = plot.orbits;
  m["escaped"] = plot.escaped;
  m["disc_contrast_r005"] = disc_contrast(plot, 0.05);
  auto q = quadrant_occupancy(plot);
  m["quadrant_occupancy"] = Json::array({q[0], q[1], q[2], q[3]});
  m["outputs"].push_back(c.out + ".ppm");
  Common csv_common = c;
  csv_common.format = "csv";
  emit(csv_common, csv.str(), Json(), m, since(t0));
}

void cmd_agreement(const std::string& r, const std::string& lambdas, const Integer& budget, const Common& c) {
  auto t0 = std::chrono::steady_clock::now();
  auto rows = agreement_table(parse_rational(r), parse_list(lambdas), budget);
  std::ostringstream csv;
  io::CsvWriter w(csv);
  w.row({"r", "lambda", "total", "agree", "fraction"});
  Json table = Json::array();
  for (const auto& row : rows) {
    w.row({to_string(row.r), to_string(row.lambda), to_string(row.count.total), to_string(row.count.agree),
           to_decimal(row.count.fraction())});
    table.push_back({{"r", to_string(row.r)},
                     {"lambda", to_string(row.lambda)},
                     {"total", to_string(row.count.total)},
                     {"agree", to_string(row.count.agree)},
                     {"fraction", row.count.fraction()}});
  }
  auto m = manifest_base("agreement", c);
  m["r"] = r;
  m["lambda"] = split(lambdas);
  m["budget"] = to_string(budget);
  emit(c, csv.str(), table, m, since(t0));
}

std::pair<int, int> parse_res(const std::string& s) {
  if (s.empty() || s == "native") return {0, 0};
  auto x = s.find('x');
  if (x == std::string::npos) throw ContractViolation("--res expects WxH");
  return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output path stem");
  sub->add_option("--format", c.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "Recorded in the manifest; the pipelines draw no random numbers");
  sub->add_flag("--timing", c.timing, "Record wall time in the manifest");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact simulation of the discretised rotation in the integrable limit"};
  app.require_subcommand(1);
  Common common;

  std::string n_list = "100,200,400,800", b_list = "0,3/10";
  auto* twist = app.add_subcommand("twist-table", "Twist kappa(e) and rho*(e) on an (n, b) grid");
  twist->add_option("--n", n_list, "Comma-separated n values");
  twist->add_option("--b", b_list, "Comma-separated b values in [0, 1)");
  add_common(twist, common);

  long profile_n = 100;
  int profile_points = 100;
  auto* profile = app.add_subcommand("period-profile", "Scaled period function against its asymptotic profile");
  profile->add_option("--n", profile_n, "n")->check(CLI::PositiveNumber);
  profile->add_option("--points", profile_points, "Number of b-grid points")->check(CLI::PositiveNumber);
  add_common(profile, common);

  std::string e_text, lambda_text = "auto", res_text = "native";
  long m = 32;
  std::uint64_t cap = 10'000'000;
  int z0_count = 3, lambda_count = 3;
  auto* dist = app.add_subcommand("distribution", "Period distribution of the return map over A-bar");
  dist->add_option("--e", e_text, "Critical number e")->required();
  dist->add_option("--m", m, "Number of fundamental domains")->check(CLI::PositiveNumber);
  dist->add_option("--lambda", lambda_text, "p/q or auto");
  dist->add_option("--lambdas", lambda_count, "Number of automatic lambda values")->check(CLI::PositiveNumber);
  dist->add_option("--z0", z0_count, "Base points per lambda")->check(CLI::PositiveNumber);
  dist->add_option("--cap", cap, "Maximum orbit length in return-map steps")->check(CLI::PositiveNumber);
  add_common(dist, common);

  long stride = 4;
  bool no_h = false;
  auto* phase = app.add_subcommand("phase-plot", "Pixel plot of symmetric orbits in (theta, rho)");
  phase->add_option("--e", e_text, "Critical number e")->required();
  phase->add_option("--lambda", lambda_text, "p/q or auto");
  phase->add_option("--res", res_text, "WxH, or native");
  phase->add_option("--cap", cap, "Maximum orbit length in return-map steps")->check(CLI::PositiveNumber);
  phase->add_option("--stride", stride, "Seed every k-th lattice row")->check(CLI::PositiveNumber);
  phase->add_flag("--no-phi-g-seeds", no_h, "Seed from Fix G^e only");
  add_common(phase, common);

  std::string r_text = "5", lambdas_text = "1/100,1/1000,1/10000", budget_text = "100000000000";
  auto* agree = app.add_subcommand("agreement", "Density of points where F^4 matches the flow translation");
  agree->add_option("--r", r_text, "Half-width of the square region");
  agree->add_option("--lambda", lambdas_text, "Comma-separated lambda values");
  agree->add_option("--budget", budget_text, "Maximum number of lattice points");
  add_common(agree, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*twist) {
      cmd_twist_table(n_list, b_list, common);
    } else if (*profile) {
      cmd_period_profile(profile_n, profile_points, common);
    } else if (*dist) {
      DistributionConfig cfg;
      cfg.e = Integer(e_text);
      cfg.m = m;
      if (lambda_text != "auto") cfg.lambda = parse_rational(lambda_text);
      cfg.lambda_count = lambda_count;
      cfg.z0_count = z0_count;
      cfg.period_cap = cap;
      cfg.threads = common.threads;
      if (common.format != "json" && common.out.empty()) common.format = "csv";
      cmd_distribution(cfg, common);
    } else if (*phase) {
      PhasePlotConfig cfg;
      cfg.e = Integer(e_text);
      if (lambda_text != "auto") cfg.lambda = parse_rational(lambda_text);
      std::tie(cfg.width, cfg.height) = parse_res(res_text);
      cfg.orbit_cap = cap == 10'000'000 ? cfg.orbit_cap : cap;
      cfg.seed_stride = stride;
      cfg.scan_h = !no_h;
      cmd_phase_plot(cfg, common);
    } else if (*agree) {
      cmd_agreement(r_text, lambdas_text, Integer(budget_text), common);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
