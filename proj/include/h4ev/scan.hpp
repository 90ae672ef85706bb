#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "h4ev/diabat.hpp"

namespace h4ev {

enum class RunKind { FciOnly, Adiabatic, Diabatic, Full };
enum class SolverKind { Frobenius, TwoStep, Weighted };
enum class DiabatRoute { Rotation, Constrained };

inline std::string to_string(RunKind k) {
  switch (k) {
    case RunKind::FciOnly: return "fci-only";
    case RunKind::Adiabatic: return "adiabatic";
    case RunKind::Diabatic: return "diabatic";
    case RunKind::Full: return "full";
  }
  throw DomainError("scan: bad run kind");
}

inline std::string to_string(SolverKind k) {
  switch (k) {
    case SolverKind::Frobenius: return "frobenius";
    case SolverKind::TwoStep: return "two-step";
    case SolverKind::Weighted: return "weighted";
  }
  throw DomainError("scan: bad solver kind");
}

inline SolverKind solver_from_string(const std::string& s) {
  if (s == "frobenius") return SolverKind::Frobenius;
  if (s == "two-step") return SolverKind::TwoStep;
  if (s == "weighted") return SolverKind::Weighted;
  throw DomainError("scan: unknown solver '" + s + "'");
}

inline std::string to_string(DiabatRoute r) {
  return r == DiabatRoute::Rotation ? "rotation" : "constrained";
}

inline DiabatRoute route_from_string(const std::string& s) {
  if (s == "rotation") return DiabatRoute::Rotation;
  if (s == "constrained") return DiabatRoute::Constrained;
  throw DomainError("scan: unknown route '" + s + "'");
}

/// Uniform sweep of the apex-atom z shift at fixed in-plane shifts.
struct GridSpec {
  double dx2 = 0.1, dy3 = 0.05;
  double dz1_min = -0.30, dz1_max = 0.30, dz1_step = 0.01;

  std::vector<Distortion> points() const {
    if (!(dz1_step > 0.0) || dz1_max < dz1_min - 1e-12)
      throw DomainError("scan: empty or ill-ordered grid");
    std::vector<Distortion> pts;
    const int n = int(std::round((dz1_max - dz1_min) / dz1_step));
    for (int i = 0; i <= n; ++i)
      pts.push_back({dx2, dy3, dz1_min + i * dz1_step});
    return pts;
  }
};

struct ScanConfig {
  RunKind kind = RunKind::Full;
  GridSpec grid;
  MOKind mo = MOKind::Diabatic;
  Distortion diabatic_ref{0.1, 0.0, -0.1};
  EnsembleProblem::Mode mode = EnsembleProblem::Mode::Penalty;
  SolverKind solver = SolverKind::Frobenius;
  Eigen::Vector3d weights{3.0, 2.0, 1.0};
  DiabatRoute route = DiabatRoute::Rotation;
  std::string out_dir;  // empty: no files written
  int jobs = 1;
  bool warm_start = false;  // sequential sweep seeding each point from the last

  void validate() const {
    grid.points();  // non-empty, ordered
    if (jobs < 1) throw DomainError("scan: jobs must be positive");
    if (!(weights(0) >= weights(1) && weights(1) >= weights(2) &&
          weights(2) > 0.0))
      throw DomainError("scan: weights must be non-increasing and positive");
    if ((kind == RunKind::Diabatic || kind == RunKind::Full) &&
        mo != MOKind::Diabatic)
      throw DomainError("scan: diabatization requires the diabatic MO basis");
  }
};

struct ScanPoint {
  int index = 0;
  Distortion distortion;
  bool failed = false;
  std::string failure;

  Eigen::Vector3d fci = Eigen::Vector3d::Zero();

  bool have_ensemble = false;
  EnsembleResult ens;
  Eigen::Matrix3d h_breve = Eigen::Matrix3d::Zero();  // at zero angles
  ResolveResult resolved;
  AdiabaticOrder order;

  bool have_diabat = false;
  Eigen::Matrix3d o_before = Eigen::Matrix3d::Zero();
  Eigen::Vector3d leakage = Eigen::Vector3d::Zero();
  double d_descriptor = 0.0;
  double r_before = 0.0;
  double r_after = 0.0;
  Angles diabat_angles;
  Eigen::Matrix3d o_star = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d h_diabatic = Eigen::Matrix3d::Zero();
  bool diabat_converged = false;
};

struct ScanReport {
  ScanConfig config;
  std::vector<ScanPoint> points;

  bool any_failure() const {
    for (const auto& p : points)
      if (p.failed ||
          (p.have_ensemble && !(p.ens.converged && p.resolved.converged)) ||
          (p.have_diabat && !p.diabat_converged))
        return true;
    return false;
  }
};

namespace detail {

inline MOIntegrals point_integrals(const ScanConfig& cfg, const Distortion& d,
                                   const Geometry* g_ref,
                                   const MOBasis* mo_ref) {
  const auto g = distort(td_reference(), d);
  const auto ao = compute_ao_integrals(g, basis_for_geometry(g));
  switch (cfg.mo) {
    case MOKind::CanonicalROHF:
      return ao_to_mo(ao, rohf(ao));
    case MOKind::Lowdin:
      return ao_to_mo(ao, lowdin_orbitals(ao));
    case MOKind::Diabatic: {
      const auto mo = rohf(ao);
      return ao_to_mo(
          ao, diabatic_mos(*mo_ref, mo, cross_ao_overlap(*g_ref, g)));
    }
  }
  throw DomainError("scan: bad MO kind");
}

inline ResolveResult run_solver(const ScanConfig& cfg,
                                const Eigen::Matrix3d& h) {
  switch (cfg.solver) {
    case SolverKind::Frobenius: return solve_frobenius(h);
    case SolverKind::TwoStep: return solve_two_step(h);
    case SolverKind::Weighted: return solve_weighted(h, cfg.weights);
  }
  throw DomainError("scan: bad solver kind");
}

inline void compute_point(const ScanConfig& cfg, ScanPoint& pt,
                          const Geometry* g_ref, const MOBasis* mo_ref,
                          const AnsatzParams* warm) {
  const auto mi = point_integrals(cfg, pt.distortion, g_ref, mo_ref);
  pt.fci = fci_solve(mi).eigenvalues.head(3);
  if (cfg.kind == RunKind::FciOnly) return;

  const auto problem = make_ensemble_problem(mi, 2, cfg.mode);
  const bool constrained_diabat = (cfg.kind == RunKind::Diabatic ||
                                   cfg.kind == RunKind::Full) &&
                                  cfg.route == DiabatRoute::Constrained;
  if (constrained_diabat) {
    const auto cr = constrained_diabatic_optimize(problem, 1e-8, warm);
    pt.ens = cr.ens;
  } else {
    pt.ens = optimize_ensemble(problem, warm);
  }
  pt.have_ensemble = true;
  pt.h_breve = subspace_hamiltonian(problem, pt.ens.t_star);
  pt.resolved = detail::run_solver(cfg, pt.h_breve);
  pt.order = assign_adiabatic_order(pt.resolved.h_prime.diagonal());

  if (cfg.kind != RunKind::Diabatic && cfg.kind != RunKind::Full) return;
  const auto o = overlap_submatrix(problem, pt.ens.t_star);
  pt.o_before = o.O;
  pt.leakage = o.leakage;
  const auto dec0 = decompose(o.O);
  pt.d_descriptor = dec0.d;
  pt.r_before = dec0.r;
  if (cfg.route == DiabatRoute::Rotation) {
    const auto ds = optimal_diabatic_states(problem, pt.ens.t_star);
    pt.diabat_angles = ds.angles;
    pt.r_after = ds.dec.r;
    pt.o_star = ds.dec.O_star;
    pt.h_diabatic = ds.h_prime;
    pt.diabat_converged = ds.converged && pt.ens.converged;
  } else {
    // the constraint already pinned r: the evolved models are the states
    pt.diabat_angles = Angles{};
    pt.r_after = dec0.r;
    pt.o_star = dec0.O_star;
    pt.h_diabatic = pt.h_breve;
    pt.diabat_converged = pt.ens.converged && dec0.r < 1e-6;
  }
  pt.have_diabat = true;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("scan: cannot write " + path.string());
  os << text;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

}  // namespace detail

/// One figure-ready CSV per id. Columns are fixed contracts; all values are
/// plain numbers, so RFC-4180 quoting never triggers, but the writer is
/// shared and deterministic either way.
inline std::string emit_plotdata(const ScanReport& report,
                                 const std::string& figure_id) {
  using detail::fmt;
  std::string out;
  auto row = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      const std::string& f = fields[i];
      if (f.find_first_of(",\"\n") != std::string::npos) {
        out += '"';
        for (char c : f) {
          if (c == '"') out += '"';
          out += c;
        }
        out += '"';
      } else {
        out += f;
      }
    }
    out += '\n';
  };

  const auto& pts = report.points;
  if (figure_id == "fig1b") {
    row({"dz1", "E0", "E1", "E2"});
    for (const auto& p : pts)
      row({fmt(p.distortion.dz1), fmt(p.fci(0)), fmt(p.fci(1)),
           fmt(p.fci(2))});
  } else if (figure_id == "fig3a") {
    row({"dz1", "H_AA", "H_BB", "H_CC"});
    for (const auto& p : pts)
      row({fmt(p.distortion.dz1), fmt(p.h_breve(0, 0)), fmt(p.h_breve(1, 1)),
           fmt(p.h_breve(2, 2))});
  } else if (figure_id == "fig4b") {
    row({"dz1", "Hp_AA", "Hp_BB", "Hp_CC", "E0", "E1", "E2"});
    for (const auto& p : pts)
      row({fmt(p.distortion.dz1), fmt(p.resolved.h_prime(0, 0)),
           fmt(p.resolved.h_prime(1, 1)), fmt(p.resolved.h_prime(2, 2)),
           fmt(p.fci(0)), fmt(p.fci(1)), fmt(p.fci(2))});
  } else if (figure_id == "fig5b") {
    row({"dz1", "O_AA", "O_AB", "O_AC", "O_BA", "O_BB", "O_BC", "O_CA",
         "O_CB", "O_CC"});
    for (const auto& p : pts) {
      std::vector<std::string> r{fmt(p.distortion.dz1)};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.push_back(fmt(p.o_before(i, j)));
      row(r);
    }
  } else if (figure_id == "fig6a") {
    row({"dz1", "Hd_AA", "Hd_BB", "Hd_CC"});
    for (const auto& p : pts)
      row({fmt(p.distortion.dz1), fmt(p.h_diabatic(0, 0)),
           fmt(p.h_diabatic(1, 1)), fmt(p.h_diabatic(2, 2))});
  } else if (figure_id == "fig6b") {
    row({"dz1", "Os_AA", "Os_AB", "Os_AC", "Os_BA", "Os_BB", "Os_BC", "Os_CA",
         "Os_CB", "Os_CC"});
    for (const auto& p : pts) {
      std::vector<std::string> r{fmt(p.distortion.dz1)};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.push_back(fmt(p.o_star(i, j)));
      row(r);
    }
  } else if (figure_id == "fig7") {
    row({"dz1", "Hb_AB", "Hb_AC", "Hb_BC", "Hd_AB", "Hd_AC", "Hd_BC"});
    for (const auto& p : pts)
      row({fmt(p.distortion.dz1), fmt(p.h_breve(0, 1)), fmt(p.h_breve(0, 2)),
           fmt(p.h_breve(1, 2)), fmt(p.h_diabatic(0, 1)),
           fmt(p.h_diabatic(0, 2)), fmt(p.h_diabatic(1, 2))});
  } else if (figure_id == "descriptors") {
    row({"dz1", "d", "r_before", "r_after", "leak_A", "leak_B", "leak_C"});
    for (const auto& p : pts)
      row({fmt(p.distortion.dz1), fmt(p.d_descriptor), fmt(p.r_before),
           fmt(p.r_after), fmt(p.leakage(0)), fmt(p.leakage(1)),
           fmt(p.leakage(2))});
  } else if (figure_id == "diabatic") {
    row({"dz1", "E0", "E1", "E2", "Hd_AA", "Hd_BB", "Hd_CC", "Hd_AB", "Hd_AC",
         "Hd_BC", "d", "r"});
    for (const auto& p : pts)
      row({fmt(p.distortion.dz1), fmt(p.fci(0)), fmt(p.fci(1)), fmt(p.fci(2)),
           fmt(p.h_diabatic(0, 0)), fmt(p.h_diabatic(1, 1)),
           fmt(p.h_diabatic(2, 2)), fmt(p.h_diabatic(0, 1)),
           fmt(p.h_diabatic(0, 2)), fmt(p.h_diabatic(1, 2)),
           fmt(p.d_descriptor), fmt(p.r_after)});
  } else {
    throw DomainError("emit_plotdata: unknown figure id '" + figure_id + "'");
  }
  return out;
}

inline nlohmann::json point_json(const ScanPoint& p) {
  nlohmann::json j;
  j["index"] = p.index;
  j["distortion"] = {p.distortion.dx2, p.distortion.dy3, p.distortion.dz1};
  j["failed"] = p.failed;
  if (p.failed) {
    j["failure"] = p.failure;
    return j;
  }
  j["fci"] = {p.fci(0), p.fci(1), p.fci(2)};
  if (p.have_ensemble) {
    auto& e = j["ensemble"];
    e["energies"] = p.ens.state_energies;
    e["ensemble"] = p.ens.ensemble;
    e["spin_expectations"] = p.ens.spin_expectations;
    e["spin_deviation"] = p.ens.spin_dev;
    e["iterations"] = p.ens.iterations;
    e["converged"] = p.ens.converged;
    e["t_star"] = std::vector<double>(
        p.ens.t_star.t.data(), p.ens.t_star.t.data() + p.ens.t_star.t.size());
    auto& r = j["resolve"];
    r["angles"] = {p.resolved.angles.theta, p.resolved.angles.phi,
                   p.resolved.angles.psi};
    r["diagonal"] = {p.resolved.h_prime(0, 0), p.resolved.h_prime(1, 1),
                     p.resolved.h_prime(2, 2)};
    r["offdiagonal_residual"] = p.resolved.offdiag;
    r["converged"] = p.resolved.converged;
    r["fallback"] = p.resolved.fallback;
    r["permutation"] = p.order.perm;
    r["reordered"] = p.order.reordered;
  }
  if (p.have_diabat) {
    auto& d = j["diabat"];
    auto mat = [](const Eigen::Matrix3d& m) {
      return std::array<std::array<double, 3>, 3>{
          {{m(0, 0), m(0, 1), m(0, 2)},
           {m(1, 0), m(1, 1), m(1, 2)},
           {m(2, 0), m(2, 1), m(2, 2)}}};
    };
    d["overlap"] = mat(p.o_before);
    d["leakage"] = {p.leakage(0), p.leakage(1), p.leakage(2)};
    d["d"] = p.d_descriptor;
    d["r_before"] = p.r_before;
    d["r_after"] = p.r_after;
    d["angles"] = {p.diabat_angles.theta, p.diabat_angles.phi,
                   p.diabat_angles.psi};
    d["overlap_star"] = mat(p.o_star);
    d["hamiltonian"] = mat(p.h_diabatic);
    d["converged"] = p.diabat_converged;
  }
  return j;
}

/// Full pipeline over the grid. Per-point failures are recorded and the
/// sweep continues; nothing throws for a bad geometry, only for a bad
/// configuration.
inline ScanReport run_scan(const ScanConfig& cfg) {
  cfg.validate();
  ScanReport report;
  report.config = cfg;
  const auto grid = cfg.grid.points();
  report.points.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    report.points[i].index = int(i);
    report.points[i].distortion = grid[i];
  }

  // shared diabatic reference
  Geometry g_ref;
  MOBasis mo_ref;
  if (cfg.mo == MOKind::Diabatic) {
    g_ref = distort(td_reference(), cfg.diabatic_ref);
    mo_ref = rohf(compute_ao_integrals(g_ref, basis_for_geometry(g_ref)));
  }
  const Geometry* g_ref_p = cfg.mo == MOKind::Diabatic ? &g_ref : nullptr;
  const MOBasis* mo_ref_p = cfg.mo == MOKind::Diabatic ? &mo_ref : nullptr;

  auto run_one = [&](ScanPoint& pt, const AnsatzParams* warm) {
    try {
      detail::compute_point(cfg, pt, g_ref_p, mo_ref_p, warm);
    } catch (const std::exception& ex) {
      pt.failed = true;
      pt.failure = ex.what();
    }
  };

  if (cfg.warm_start || cfg.jobs == 1) {
    const AnsatzParams* warm = nullptr;
    for (auto& pt : report.points) {
      run_one(pt, cfg.warm_start ? warm : nullptr);
      if (cfg.warm_start && pt.have_ensemble) warm = &pt.ens.t_star;
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < report.points.size();
           i = next.fetch_add(1))
        run_one(report.points[i], nullptr);
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < cfg.jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // continuity of the reported angles along the sweep
  for (std::size_t i = 1; i < report.points.size(); ++i) {
    auto& cur = report.points[i];
    const auto& prev = report.points[i - 1];
    if (cur.have_ensemble && prev.have_ensemble)
      cur.resolved.angles =
          unwrap_toward(cur.resolved.angles, prev.resolved.angles);
    if (cur.have_diabat && prev.have_diabat)
      cur.diabat_angles = unwrap_toward(cur.diabat_angles, prev.diabat_angles);
  }

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir / "points");
    nlohmann::json summary;
    summary["kind"] = to_string(cfg.kind);
    summary["mo"] = to_string(cfg.mo);
    summary["solver"] = to_string(cfg.solver);
    summary["route"] = to_string(cfg.route);
    summary["mode"] =
        cfg.mode == EnsembleProblem::Mode::Penalty ? "penalty" : "constrained";
    summary["points"] = report.points.size();
    summary["failures"] = report.any_failure();
    detail::write_file(dir / "scan.json", summary.dump(2) + "\n");
    for (const auto& p : report.points) {
      char name[32];
      std::snprintf(name, sizeof name, "point_%03d.json", p.index);
      detail::write_file(dir / "points" / name, point_json(p).dump(2) + "\n");
    }
    std::vector<std::string> figures{"fig1b"};
    if (cfg.kind != RunKind::FciOnly)
      figures.insert(figures.end(), {"fig3a", "fig4b"});
    if (cfg.kind == RunKind::Diabatic || cfg.kind == RunKind::Full)
      figures.insert(figures.end(),
                     {"fig5b", "fig6a", "fig6b", "fig7", "descriptors",
                      "diabatic"});
    for (const auto& f : figures)
      detail::write_file(dir / (f + ".csv"), emit_plotdata(report, f));
  }
  return report;
}

}  // namespace h4ev
