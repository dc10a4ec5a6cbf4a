// Command-line driver: solve / classify / verify / energy pipelines over a
// JSON config, emitting JSON reports and CSV profile dumps.
//
// Exit codes: 0 all checks pass, 1 solver or check failure, 2 invalid input.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "whirl/classify.hpp"
#include "whirl/coeff.hpp"
#include "whirl/op.hpp"
#include "whirl/pressure.hpp"
#include "whirl/reduced.hpp"
#include "whirl/variation.hpp"
#include "whirl/whirl_map.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace whirl;

namespace {

constexpr const char* kSchemaTag = "whirl-report/1";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  Annulus ann{2, 1.0, 2.0};
  std::optional<Coefficient> A, H, B, F;
  WindingVector m;
  int m_bound = -1;
  std::string profile = "bvp";  // bvp | linear
  unsigned seed = 12345;
  double grid_scale = 1.0;
  json echo;
};

ValidityBox box_for(const Annulus& ann) {
  ValidityBox box;
  box.r_lo = ann.a;
  box.r_hi = ann.b;
  box.s_lo = ann.a * ann.a;
  box.s_hi = ann.b * ann.b;
  box.xi_lo = ann.n;
  box.xi_hi = 1e4;
  return box;
}

RunConfig load_config(const std::string& path, unsigned seed_override, bool has_seed,
                      const std::string& grid) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.contains("annulus")) throw ConfigError("config missing 'annulus'");
  const auto& an = doc["annulus"];
  RunConfig cfg{Annulus(an.value("n", 2), an.value("a", 1.0), an.value("b", 2.0))};
  cfg.echo = doc;
  const ValidityBox box = box_for(cfg.ann);

  auto coeff = [&](const char* key, CoeffKind kind) -> std::optional<Coefficient> {
    if (!doc.contains(key)) return std::nullopt;
    try {
      return Coefficient::from_expr(doc[key].get<std::string>(), kind, box);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bad coefficient '") + key + "': " + e.what());
    }
  };
  cfg.A = coeff("A", CoeffKind::General);
  cfg.H = coeff("H", CoeffKind::RadialOnly);
  cfg.B = coeff("B", CoeffKind::LowerOrder);
  cfg.F = coeff("F", CoeffKind::Energy);
  if (!cfg.B) cfg.B = Coefficient::constant(0.0, CoeffKind::LowerOrder, box);

  if (doc.contains("m")) {
    const auto& marr = doc["m"];
    if (!marr.is_array()) throw ConfigError("'m' must be an array of integers");
    if (int(marr.size()) != cfg.ann.d())
      throw ConfigError("winding vector has " + std::to_string(marr.size()) +
                        " entries, expected d = " + std::to_string(cfg.ann.d()));
    cfg.m.resize(cfg.ann.d());
    for (int i = 0; i < cfg.ann.d(); ++i) cfg.m[i] = marr[i].get<int>();
  }
  cfg.m_bound = doc.value("m_bound", -1);
  cfg.profile = doc.value("profile", "bvp");
  if (cfg.profile != "bvp" && cfg.profile != "linear")
    throw ConfigError("'profile' must be 'bvp' or 'linear'");
  cfg.seed = doc.value("seed", 12345u);
  if (has_seed) cfg.seed = seed_override;
  if (grid == "COARSE")
    cfg.grid_scale = 0.5;
  else if (grid == "FINE")
    cfg.grid_scale = 2.0;
  else if (grid != "DEFAULT")
    throw ConfigError("--grid must be COARSE, DEFAULT or FINE");
  return cfg;
}

const Coefficient& principal(const RunConfig& cfg) {
  if (cfg.A) return *cfg.A;
  if (cfg.H) return *cfg.H;
  throw ConfigError("config must provide 'A' or 'H'");
}

int equal_winding(const RunConfig& cfg) {
  if (cfg.m.size() == 0) throw ConfigError("config missing winding vector 'm'");
  for (int i = 1; i < cfg.m.size(); ++i)
    if (cfg.m[i] != cfg.m[0])
      throw ConfigError("this pipeline needs an equal-entry winding vector");
  return cfg.m[0];
}

/// Uniform rescaling of an angle profile (used to renormalize the closed
/// form to end value 1 for per-component specs).
class ScaledProfile final : public AngleProfile {
 public:
  ScaledProfile(std::shared_ptr<const AngleProfile> base, double c) : base_(std::move(base)), c_(c) {}
  double value(double r) const override { return c_ * base_->value(r); }
  double deriv(double r) const override { return c_ * base_->deriv(r); }
  double deriv2(double r) const override { return c_ * base_->deriv2(r); }

 private:
  std::shared_ptr<const AngleProfile> base_;
  double c_;
};

json check_record(const std::string& name, const std::string& route, double abs,
                  double rel, double tol) {
  json rec;
  rec["name"] = name;
  rec["route"] = route;
  rec["norm_abs"] = abs;
  rec["norm_rel"] = rel;
  rec["tolerance"] = tol;
  rec["pass"] = rel <= tol;
  return rec;
}

void write_file(const fs::path& path, const std::string& body) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << body;
  if (!out) throw CheckFailure("cannot write " + path.string());
}

json report_skeleton(const RunConfig& cfg, const std::string& command) {
  json rep;
  rep["schema"] = kSchemaTag;
  rep["command"] = command;
  rep["config"] = cfg.echo;
  rep["seed"] = cfg.seed;
  return rep;
}

// ---------------------------------------------------------------- solve ----

int cmd_solve(const RunConfig& cfg, const fs::path& out_dir) {
  const Coefficient& A = principal(cfg);
  const int m = equal_winding(cfg);
  auto prof = solve_bvp(A, cfg.ann, m);

  json rep = report_skeleton(cfg, "solve");
  rep["flux"] = prof->flux();
  rep["winding"] = m;

  // flux conservation across the grid
  double flux_dev = 0;
  for (int j = 0; j < prof->nodes().size(); ++j) {
    const double r = prof->nodes()[j], g = prof->deriv(r);
    const double f = std::pow(r, cfg.ann.n + 1) * A(r, r * r, cfg.ann.n + r * r * g * g) * g;
    flux_dev = std::max(flux_dev, std::abs(f - prof->flux()) / (1 + std::abs(prof->flux())));
  }
  rep["checks"] = json::array();
  rep["checks"].push_back(check_record("flux_conservation", "solver", flux_dev, flux_dev, 1e-9));

  if (A.kind() == CoeffKind::RadialOnly) {
    auto cf = closed_form_profile(A, cfg.ann, m);
    double dev = 0;
    for (int j = 0; j < prof->nodes().size(); ++j)
      dev = std::max(dev, std::abs(prof->value(prof->nodes()[j]) - cf->value(prof->nodes()[j])));
    rep["checks"].push_back(check_record("closed_form_agreement", "solver", dev, dev, 1e-8));
    rep["closed_form_flux"] = cf->flux();
  }

  write_file(out_dir / "profile.csv", prof->to_csv());
  rep["profile_csv"] = (out_dir / "profile.csv").string();
  bool ok = true;
  for (const auto& c : rep["checks"]) ok = ok && c["pass"].get<bool>();
  write_file(out_dir / "report_solve.json", rep.dump(2) + "\n");
  std::cout << rep.dump(2) << std::endl;
  return ok ? 0 : 1;
}

// ------------------------------------------------------------- classify ----

json verdict_json(const Verdict& v) {
  json out;
  out["m"] = std::vector<int>(v.m.data(), v.m.data() + v.m.size());
  out["delta_status"] =
      v.delta_status == DeltaStatus::IdenticallyZero ? "identically_zero" : "nonzero";
  out["delta_max_abs"] = v.decision.max_abs;
  out["delta_threshold"] = v.decision.threshold;
  out["delta_samples"] = v.decision.samples;
  out["admissible"] = v.admissible;
  out["reason"] = v.reason;
  return out;
}

int cmd_classify(const RunConfig& cfg, const fs::path& out_dir) {
  if (!cfg.H) throw ConfigError("classify requires a gradient-independent 'H'");
  json rep = report_skeleton(cfg, "classify");
  if (cfg.m.size() > 0)
    rep["verdict"] = verdict_json(classify(cfg.ann, cfg.m, *cfg.H, *cfg.B));
  if (cfg.m_bound >= 0) {
    json all = json::array();
    json admissible = json::array();
    const int d = cfg.ann.d(), bound = cfg.m_bound;
    WindingVector m(d);
    std::function<void(int)> sweep = [&](int slot) {
      if (slot == d) {
        Verdict v = classify(cfg.ann, m, *cfg.H, *cfg.B);
        all.push_back(verdict_json(v));
        if (v.admissible)
          admissible.push_back(std::vector<int>(m.data(), m.data() + d));
        return;
      }
      for (int val = -bound; val <= bound; ++val) {
        m[slot] = val;
        sweep(slot + 1);
      }
    };
    sweep(0);
    rep["sweep"] = std::move(all);
    rep["admissible_set"] = std::move(admissible);
  }
  write_file(out_dir / "report_classify.json", rep.dump(2) + "\n");
  std::cout << rep.dump(2) << std::endl;
  return 0;
}

// --------------------------------------------------------------- verify ----

int cmd_verify(const RunConfig& cfg, const fs::path& out_dir) {
  if (cfg.m.size() == 0) throw ConfigError("verify requires a winding vector 'm'");
  const Coefficient& A = principal(cfg);
  const Annulus& ann = cfg.ann;
  json rep = report_skeleton(cfg, "verify");
  rep["checks"] = json::array();
  auto push = [&rep](json rec) { rep["checks"].push_back(std::move(rec)); };

  bool equal_mag = true, equal_val = true;
  for (int i = 1; i < cfg.m.size(); ++i) {
    if (std::abs(cfg.m[i]) != std::abs(cfg.m[0])) equal_mag = false;
    if (cfg.m[i] != cfg.m[0]) equal_val = false;
  }

  // build the whirl spec
  WhirlSpec spec = WhirlSpec::identity(ann);
  std::shared_ptr<RadialProfile> shared_prof;
  if (cfg.profile == "linear") {
    const int m = equal_winding(cfg);
    spec = WhirlSpec::shared_profile(
        ann, m, std::make_shared<LinearProfile>(ann.a, ann.b, 2 * M_PI * m));
  } else if (equal_val) {
    const int m = cfg.m[0];
    shared_prof = solve_bvp(A, ann, m);
    spec = WhirlSpec::shared_profile(ann, m, shared_prof);
  } else {
    if (A.kind() != CoeffKind::RadialOnly)
      throw ConfigError("unequal windings need a gradient-independent 'H'");
    auto base = closed_form_profile(A, ann, 1);
    spec = WhirlSpec::per_component(
        ann, cfg.m, std::make_shared<ScaledProfile>(base, 1.0 / (2 * M_PI)));
  }

  auto grid = interior_grid(ann, int(24 * cfg.grid_scale), int(48 * cfg.grid_scale), cfg.seed);

  // incompressibility and boundary condition
  double det_dev = 0, bnd_dev = 0;
  for (const auto& x : grid) {
    MapJet j = map_jet(spec, x);
    det_dev = std::max(det_dev, std::abs(j.det - 1.0));
    for (const double rho : {ann.a, ann.b}) {
      VectorXd xb = x * (rho / x.norm());
      auto [yb, zb] = radial_coords(xb, ann);
      bnd_dev = std::max(bnd_dev, (assemble_Q(spec, yb) * xb - xb).norm());
    }
  }
  push(check_record("incompressibility", "direct", det_dev, det_dev, 1e-11));
  push(check_record("dirichlet_boundary", "direct", bnd_dev, bnd_dev, 1e-9));

  // route equivalence on a subset
  double scale = 1, dw = 0, dr = 0;
  for (size_t i = 0; i < grid.size(); i += 4) {
    OperatorValue d0 = L_direct(spec, A, *cfg.B, grid[i]);
    OperatorValue w0 = L_whirl(spec, A, *cfg.B, grid[i]);
    OperatorValue r0 = L_reduced(spec, A, *cfg.B, grid[i]);
    scale = std::max(scale, 1 + d0.L.norm());
    dw = std::max(dw, (d0.L - w0.L).norm());
    dr = std::max(dr, (d0.L - r0.L).norm());
  }
  push(check_record("route_direct_vs_whirl", "whirl", dw, dw / scale, 1e-8));
  push(check_record("route_direct_vs_reduced", "reduced", dr, dr / scale, 1e-8));

  // residual of the unconstrained system
  std::vector<VectorXd> ygrid;
  for (size_t i = 0; i < grid.size(); i += 4)
    ygrid.push_back(radial_coords(grid[i], ann).first);
  ReducedResidual rres = reduced_residual(spec, A, ygrid);
  const bool is_solution = cfg.profile != "linear";
  push(check_record("reduced_residual", "reduced", rres.max_abs, rres.max_abs, 1e-7));
  rep["reduced_residual_max"] = rres.max_abs;

  // classification (only defined for gradient-independent H)
  bool admissible = equal_mag;  // xi-dependent A: the equal-winding family
  if (A.kind() == CoeffKind::RadialOnly) {
    Verdict v = classify(ann, cfg.m, A, *cfg.B);
    rep["verdict"] = verdict_json(v);
    admissible = v.admissible;
    std::vector<VectorXd> xsub(grid.begin(), grid.begin() + std::min<size_t>(64, grid.size()));
    CurlConditionReport curl = curl_condition(spec, A, *cfg.B, xsub);
    rep["curl_pair_residual_max"] = curl.max_abs;
    if (v.admissible)
      push(check_record("curl_condition", "classify", curl.max_abs, curl.max_abs, 1e-8));
  }
  push(check_record("admissibility", "classify", admissible ? 0.0 : 1.0,
                    admissible ? 0.0 : 1.0, 0.5));

  // pressure construction and PDE residual
  if (admissible && is_solution) {
    PressureField P;
    if (equal_mag && shared_prof)
      P = radial_pressure(A, *cfg.B, shared_prof, ann);
    else if (equal_mag)
      P = radial_pressure(A, *cfg.B, closed_form_profile(A, ann, std::abs(cfg.m[0])), ann);
    else
      P = path_potential(A, *cfg.B, cfg.m, ann);
    rep["pressure_rep"] = P.rep == PressureRep::Radial ? "radial" : "path_potential";
    if (P.rep == PressureRep::PathPotential) {
      push(check_record("path_independence", "pressure", P.path_split_dev, P.path_split_dev,
                        1e-9));
    }
    std::vector<VectorXd> xsub;
    for (size_t i = 0; i < grid.size(); i += 4) xsub.push_back(grid[i]);
    PdeResidualReport pr = pde_residual(spec, A, *cfg.B, P, xsub);
    push(check_record("pde_residual", "pressure", pr.max_residual,
                      pr.max_residual / pr.scale, 1e-6));
    rep["pde_residual"] = {{"max", pr.max_residual},
                           {"l2", pr.l2_residual},
                           {"scale", pr.scale},
                           {"det_max_dev", pr.det_max_dev},
                           {"boundary_max_dev", pr.boundary_max_dev}};
  }

  // variational checks when an energy is supplied
  if (cfg.F && ann.n == 2 && is_solution && equal_val) {
    StoredEnergy W(*cfg.F);
    Coefficient iA = W.induced_A(), iB = W.induced_B();
    double var_rel = 0;
    for (double r = ann.a; r <= ann.b; r += 0.25 * (ann.b - ann.a)) {
      CoeffEval ea = iA.eval(r, r * r, ann.n + 1.0);
      CoeffEval eb = iB.eval(r, r * r, ann.n + 1.0);
      var_rel = std::max(var_rel, std::abs(ea.ds + eb.dxi));
    }
    push(check_record("variational_consistency", "variation", var_rel, var_rel, 1e-10));
    auto vprof = solve_bvp(iA, ann, cfg.m[0]);
    WhirlSpec vspec = WhirlSpec::shared_profile(ann, cfg.m[0], vprof);
    const double E = energy(vspec, W);
    rep["energy"] = E;
    DivFreeField v = DivFreeField::random(ann, cfg.seed);
    const double dE = first_variation(vspec, W, v);
    push(check_record("first_variation", "variation", std::abs(dE),
                      std::abs(dE) / (1 + std::abs(E)), 1e-4));
  }

  bool ok = true;
  for (const auto& c : rep["checks"]) ok = ok && c["pass"].get<bool>();
  rep["pass"] = ok;
  write_file(out_dir / "report_verify.json", rep.dump(2) + "\n");
  std::cout << rep.dump(2) << std::endl;
  return ok ? 0 : 1;
}

// --------------------------------------------------------------- energy ----

int cmd_energy(const RunConfig& cfg, const fs::path& out_dir) {
  if (!cfg.F) throw ConfigError("energy requires an 'F' stored-energy coefficient");
  StoredEnergy W(*cfg.F);
  Coefficient iA = W.induced_A();
  const int m = equal_winding(cfg);
  auto prof = solve_bvp(iA, cfg.ann, m);
  WhirlSpec spec = WhirlSpec::shared_profile(cfg.ann, m, prof);
  EnergyGrid g;
  g.radial = int(g.radial * cfg.grid_scale);
  g.angular = int(g.angular * cfg.grid_scale);
  g.polar = int(g.polar * cfg.grid_scale);
  const double E = energy(spec, W, g);
  EnergyGrid gf = g;
  gf.radial *= 2;
  gf.angular *= 2;
  const double Ef = energy(spec, W, gf);

  json rep = report_skeleton(cfg, "energy");
  rep["energy"] = E;
  rep["energy_refined"] = Ef;
  rep["quadrature_error_estimate"] = std::abs(Ef - E);
  rep["flux"] = prof->flux();
  write_file(out_dir / "report_energy.json", rep.dump(2) + "\n");
  std::cout << rep.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"whirl: rotating solution families of an incompressible elliptic system"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".", grid = "DEFAULT";
  unsigned seed = 0;
  bool has_seed = false;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed override")->each([&](const std::string&) {
    has_seed = true;
  });
  app.add_option("--grid", grid, "grid preset: COARSE, DEFAULT or FINE");
  auto* solve = app.add_subcommand("solve", "solve the radial two-point problem");
  auto* cls = app.add_subcommand("classify", "winding admissibility classification");
  auto* verify = app.add_subcommand("verify", "full solve + verification pipeline");
  auto* en = app.add_subcommand("energy", "energy of the solution for a stored energy F");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    RunConfig cfg = load_config(config_path, seed, has_seed, grid);
    const fs::path out(out_dir);
    if (solve->parsed()) return cmd_solve(cfg, out);
    if (cls->parsed()) return cmd_classify(cfg, out);
    if (verify->parsed()) return cmd_verify(cfg, out);
    if (en->parsed()) return cmd_energy(cfg, out);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const GeometryError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
