#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "h4ev/scan.hpp"

namespace {

struct Options {
  h4ev::ScanConfig cfg;
  std::string grid = "-0.30:0.01:0.30";
  std::string mo;
  std::string solver = "frobenius";
  std::string route = "rotation";
  std::string mode = "penalty";
  std::string ref = "0.1,0,-0.1";
  std::string weights = "3,2,1";
};

std::vector<double> parse_numbers(const std::string& s, char sep, int n,
                                  const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto end = s.find(sep, pos);
    const auto tok = s.substr(pos, end == std::string::npos ? end : end - pos);
    std::size_t used = 0;
    out.push_back(std::stod(tok, &used));
    if (used != tok.size()) throw CLI::ValidationError(what, "bad number '" + tok + "'");
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  if (int(out.size()) != n)
    throw CLI::ValidationError(what, "expected " + std::to_string(n) + " values");
  return out;
}

void apply_strings(Options& o) {
  const auto g = parse_numbers(o.grid, ':', 3, "--grid");
  o.cfg.grid.dz1_min = g[0];
  o.cfg.grid.dz1_step = g[1];
  o.cfg.grid.dz1_max = g[2];
  const auto r = parse_numbers(o.ref, ',', 3, "--ref-distortion");
  o.cfg.diabatic_ref = {r[0], r[1], r[2]};
  const auto w = parse_numbers(o.weights, ',', 3, "--weights");
  o.cfg.weights = Eigen::Vector3d(w[0], w[1], w[2]);
  o.cfg.solver = h4ev::solver_from_string(o.solver);
  o.cfg.route = h4ev::route_from_string(o.route);
  if (o.mode == "penalty")
    o.cfg.mode = h4ev::EnsembleProblem::Mode::Penalty;
  else if (o.mode == "constrained")
    o.cfg.mode = h4ev::EnsembleProblem::Mode::Constrained;
  else
    throw CLI::ValidationError("--mode", "expected penalty or constrained");
  if (o.mo == "canonical")
    o.cfg.mo = h4ev::MOKind::CanonicalROHF;
  else if (o.mo == "lowdin")
    o.cfg.mo = h4ev::MOKind::Lowdin;
  else if (o.mo == "diabatic")
    o.cfg.mo = h4ev::MOKind::Diabatic;
  else
    throw CLI::ValidationError("--mo", "expected canonical, lowdin or diabatic");
}

void add_common(CLI::App* sub, Options& o, const std::string& mo_default) {
  o.mo = mo_default;
  sub->add_option("--grid", o.grid, "apex z sweep as min:step:max [Å]")
      ->capture_default_str();
  sub->add_option("--dx2", o.cfg.grid.dx2, "in-plane x shift of atom 2 [Å]")
      ->capture_default_str();
  sub->add_option("--dy3", o.cfg.grid.dy3, "in-plane y shift of atom 3 [Å]")
      ->capture_default_str();
  sub->add_option("--mo", o.mo, "orbital basis: canonical, lowdin, diabatic")
      ->capture_default_str();
  sub->add_option("--ref-distortion", o.ref,
                  "reference distortion dx2,dy3,dz1 for the diabatic basis")
      ->capture_default_str();
  sub->add_option("--solver", o.solver,
                  "subspace rotation solver: frobenius, two-step, weighted")
      ->capture_default_str();
  sub->add_option("--weights", o.weights, "weighted-solver weights wA,wB,wC")
      ->capture_default_str();
  sub->add_option("--route", o.route,
                  "diabatization route: rotation, constrained")
      ->capture_default_str();
  sub->add_option("--mode", o.mode,
                  "spin handling in the optimizer: penalty, constrained")
      ->capture_default_str();
  sub->add_option("--jobs", o.cfg.jobs, "worker threads")
      ->capture_default_str();
  sub->add_flag("--warm-start", o.cfg.warm_start,
                "seed each grid point from the previous one (serial sweep)");
  sub->add_option("--out", o.cfg.out_dir, "output directory")
      ->envname("H4EV_OUT");
  sub->set_config("--config", "", "key=value configuration file");
}

int run(Options& o, h4ev::RunKind kind) {
  apply_strings(o);
  o.cfg.kind = kind;
  try {
    o.cfg.validate();
  } catch (const h4ev::Error& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
  const auto report = h4ev::run_scan(o.cfg);
  int failures = 0;
  for (const auto& p : report.points)
    if (p.failed) {
      ++failures;
      std::fprintf(stderr, "point %d (dz1=%.3f) failed: %s\n", p.index,
                   p.distortion.dz1, p.failure.c_str());
    }
  std::printf("%s: %zu points, %d failures%s%s\n",
              h4ev::to_string(kind).c_str(), report.points.size(), failures,
              o.cfg.out_dir.empty() ? "" : ", results in ",
              o.cfg.out_dir.c_str());
  return report.any_failure() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-state scan pipeline for the distorted H4+ ion"};
  app.require_subcommand(1);

  Options fci, adia, diab, full;
  add_common(app.add_subcommand("fci-only", "exact eigenvalues along the grid"),
             fci, "canonical");
  add_common(app.add_subcommand(
                 "adiabatic", "ensemble optimization and eigenstate resolution"),
             adia, "canonical");
  add_common(app.add_subcommand("diabatic",
                                "diabatization in the reference-aligned basis"),
             diab, "diabatic");
  add_common(app.add_subcommand("full", "entire pipeline at every grid point"),
             full, "diabatic");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("fci-only")) return run(fci, h4ev::RunKind::FciOnly);
    if (app.got_subcommand("adiabatic"))
      return run(adia, h4ev::RunKind::Adiabatic);
    if (app.got_subcommand("diabatic"))
      return run(diab, h4ev::RunKind::Diabatic);
    return run(full, h4ev::RunKind::Full);
  } catch (const CLI::Error& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
}
