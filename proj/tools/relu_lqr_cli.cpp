// relu_lqr command-line tool. Exit codes: 0 success, 1 invalid input or
// configuration, 2 a check failed, 3 any other runtime error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relu_lqr/errors.hpp"
#include "relu_lqr/experiments.hpp"

namespace {

namespace fs = std::filesystem;
using namespace relu_lqr;
namespace ex = relu_lqr::experiments;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kCheckFailed = 2;
constexpr int kRuntime = 3;

// Every option lives on the top-level app so that a flat config file can
// set any of them; subcommands fall through to it.
struct Options {
  SystemSpec sys = base_case();
  std::size_t m = 1000;
  double beta = 10.0;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  double iota = 0.01;
  std::string step_rule = "constant";
  std::size_t iters = 25000;
  std::optional<double> gap_tol;
  std::size_t record_every = 1;
  std::size_t track = 0;
  bool edge_case = false;
  std::size_t workers = 0;
  std::string out;

  double corrupt = 0.0;
  std::size_t points = 100;
  std::size_t networks = 50;

  std::vector<std::size_t> widths;
  std::size_t seeds = 1000;

  double tol = 5e-2;
  double stop_rel = 1e-3;

  double delta = 0.05;
  double s = 0.25;
  double S = 4.0;
  double V = 1.0;
  double eps = 0.2;
  double B = 0.5;
  std::optional<double> L_mu;
  std::optional<double> alpha_mu;
  std::size_t grid_n = 33;
  std::vector<double> betas{10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8};

  std::size_t tracked = 50;
  std::size_t edge_iters = 5000;

  StepRule rule() const {
    return step_rule == "width_scaled" ? StepRule::kWidthScaled : StepRule::kConstant;
  }
  InitConfig init() const { return {m, beta, alpha, seed}; }
  fs::path out_dir() const { return out.empty() ? fs::path("relu_lqr_out") : fs::path(out); }
};

void add_options(CLI::App& app, Options& o) {
  app.add_option("--a", o.sys.a, "open-loop coefficient")->capture_default_str();
  app.add_option("--b", o.sys.b, "input coefficient")->capture_default_str();
  app.add_option("--q", o.sys.q, "state cost")->capture_default_str();
  app.add_option("--r", o.sys.r, "input cost")->capture_default_str();
  app.add_option("--gamma", o.sys.gamma, "discount factor")->capture_default_str();
  app.add_option("--sigma2", o.sys.sigma_rho_sq, "initial-state second moment")
      ->capture_default_str();
  app.add_option("--delta0", o.sys.delta0, "open-loop margin")->capture_default_str();

  app.add_option("--m", o.m, "network width")->capture_default_str();
  app.add_option("--beta", o.beta, "hidden-layer init variance scale")->capture_default_str();
  app.add_option("--alpha", o.alpha, "output-layer init variance scale (default beta^-2)");
  app.add_option("--seed", o.seed, "master seed")->capture_default_str();
  app.add_option("--iota", o.iota, "step-size scale")->capture_default_str();
  app.add_option("--step-rule", o.step_rule, "constant (eta = iota) or width_scaled (iota/m)")
      ->check(CLI::IsMember({"constant", "width_scaled"}))
      ->capture_default_str();
  app.add_option("--iters", o.iters, "maximum gradient steps")->capture_default_str();
  app.add_option("--gap-tol", o.gap_tol, "stop once the cost gap is at or below this");
  app.add_option("--record-every", o.record_every, "telemetry stride")->capture_default_str();
  app.add_option("--track", o.track, "number of neurons to trace in train")
      ->capture_default_str();
  app.add_flag("--edge-case", o.edge_case, "train the two-neuron network with both w > 0");
  app.add_option("--workers", o.workers, "worker threads, 0 for all cores")
      ->capture_default_str();
  app.add_option("--out", o.out, "output directory")->envname("RELU_LQR_OUT");

  app.add_option("--corrupt", o.corrupt, "grad-check test hook: scale g1 by 1 + corrupt");
  app.add_option("--points", o.points, "grad-check points per region")->capture_default_str();
  app.add_option("--networks", o.networks, "grad-check networks")->capture_default_str();

  app.add_option("--widths", o.widths, "widths for init-stats or export-plots")->delimiter(',');
  app.add_option("--seeds", o.seeds, "init-stats draws per width")->capture_default_str();

  app.add_option("--tol", o.tol, "sweep success threshold on relative gain error")
      ->capture_default_str();
  app.add_option("--stop-rel", o.stop_rel, "sweep early-stop relative gain error")
      ->capture_default_str();

  app.add_option("--delta", o.delta, "stability margin")->capture_default_str();
  app.add_option("--s", o.s, "lower backbone window edge")->capture_default_str();
  app.add_option("--S", o.S, "upper backbone window edge")->capture_default_str();
  app.add_option("--V", o.V, "output-weight cap")->capture_default_str();
  app.add_option("--eps", o.eps, "concentration slack")->capture_default_str();
  app.add_option("--B", o.B, "init-stats growth budget")->capture_default_str();
  app.add_option("--L-mu", o.L_mu, "smoothness constant (estimated when absent)");
  app.add_option("--alpha-mu", o.alpha_mu, "PL constant (estimated when absent)");
  app.add_option("--grid-n", o.grid_n, "estimation grid size")->capture_default_str();
  app.add_option("--betas", o.betas, "beta values for the regime sweep")->delimiter(',');

  app.add_option("--tracked", o.tracked, "export-plots neurons to trace")->capture_default_str();
  app.add_option("--edge-iters", o.edge_iters, "export-plots edge-case iterations")
      ->capture_default_str();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << text;
    if (!out) throw Error("cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

int cmd_riccati(const Options& o) {
  const ex::RiccatiReport rep = ex::riccati_report(o.sys);
  std::cout << ex::to_text(rep);
  const bool ok = rep.residuals.gain <= 1e-12 && rep.residuals.value <= 1e-12;
  return ok ? kOk : kCheckFailed;
}

int cmd_grad_check(const Options& o) {
  ex::GradCheckConfig cfg;
  cfg.sys = o.sys;
  cfg.points_per_region = o.points;
  cfg.networks = o.networks;
  cfg.seed = o.seed;
  cfg.corrupt = o.corrupt;
  const ex::GradCheckReport rep = ex::grad_check(cfg);
  std::cout << ex::to_text(rep);
  return rep.failures() == 0 ? kOk : kCheckFailed;
}

int cmd_init_stats(const Options& o) {
  ex::InitStatsConfig cfg;
  cfg.sys = o.sys;
  cfg.beta = o.beta;
  if (!o.widths.empty()) cfg.widths = o.widths;
  cfg.seeds = o.seeds;
  cfg.seed = o.seed;
  cfg.delta = o.delta;
  cfg.s = o.s;
  cfg.S = o.S;
  cfg.V = o.V;
  cfg.eps = o.eps;
  cfg.B = o.B;
  cfg.workers = o.workers;
  const ex::InitStatsReport rep = ex::init_stats(cfg);
  std::cout << ex::to_text(rep);
  if (!o.out.empty()) ex::write_csv(rep, o.out_dir() / "init_stats.csv");
  return kOk;
}

int cmd_train(const Options& o) {
  TrainConfig cfg;
  cfg.sys = o.sys;
  cfg.init = o.init();
  cfg.iota = o.iota;
  cfg.step_rule = o.rule();
  cfg.max_iters = o.iters;
  cfg.gap_tol = o.gap_tol;
  cfg.record_every = o.record_every;
  cfg.delta = o.delta;
  if (o.edge_case) {
    cfg.theta0 = ex::edge_case_network(o.seed, o.beta);
    cfg.init.m = 2;
  }
  const std::size_t m = cfg.theta0 ? cfg.theta0->width() : cfg.init.m;
  if (o.track > 0) cfg.track_neurons = ex::pick_neurons(m, o.track, o.seed);
  const TrainHistory hist = train(cfg);
  ex::write_train_outputs(hist, cfg, o.out_dir());
  const HistoryRow& last = hist.rows.back();
  std::printf("iterations = %zu\nstop_reason = %s\nK1 = %.17g\nK2 = %.17g\nK_star = %.17g\n"
              "gap = %.6e\nout = %s\n",
              hist.iterations, hist.stop_reason.c_str(), last.K1, last.K2, hist.riccati.k_star,
              last.gap, o.out_dir().string().c_str());
  return kOk;
}

int cmd_sweep(const Options& o) {
  ex::SweepConfig cfg;
  cfg.base = o.sys;
  cfg.init = o.init();
  cfg.iota = o.iota;
  cfg.step_rule = o.rule();
  cfg.max_iters = o.iters;
  cfg.stop_rel_error = o.stop_rel;
  cfg.tol = o.tol;
  cfg.seed = o.seed;
  cfg.workers = o.workers;
  const ex::SweepReport rep = ex::sweep(cfg);
  std::cout << ex::to_text(rep, cfg.tol);
  ex::write_csv(rep, o.out_dir() / "sweep.csv");
  std::size_t within = 0;
  for (const auto& run : rep.runs) {
    if (run.status != "failed" && run.rel_gain_error <= cfg.tol) ++within;
  }
  return within >= 0.95 * static_cast<double>(rep.runs.size()) ? kOk : kCheckFailed;
}

int cmd_regime(const Options& o) {
  ex::RegimeReportConfig cfg;
  RegimeInputs& inp = cfg.inputs;
  inp.sys = o.sys;
  inp.delta = o.delta;
  inp.s = o.s;
  inp.S = o.S;
  inp.V = o.V;
  inp.eps = o.eps;
  inp.beta = o.beta;
  inp.m = o.m;
  inp.iota = o.iota;
  inp.step_rule = o.rule();
  inp.L_mu = o.L_mu;
  inp.alpha_mu = o.alpha_mu;
  cfg.grid_n = o.grid_n;
  cfg.betas = o.betas;
  cfg.workers = o.workers;
  const ex::RegimeReport rep = ex::regime_report(cfg);
  std::cout << ex::to_text(rep);
  if (!o.out.empty()) {
    write_text(o.out_dir() / "ledger.txt", ledger_text(rep.inputs, rep.constants));
    write_text(o.out_dir() / "ledger.json", ledger_json(rep.inputs, rep.constants) + "\n");
    ex::write_beta_sweep_csv(rep.sweep, o.out_dir() / "beta_sweep.csv");
  }
  return kOk;
}

int cmd_export(const Options& o) {
  ex::ExportConfig cfg;
  cfg.base.sys = o.sys;
  cfg.base.init = o.init();
  cfg.base.iota = o.iota;
  cfg.base.step_rule = o.rule();
  cfg.base.max_iters = o.iters;
  cfg.base.gap_tol = o.gap_tol;
  cfg.base.record_every = o.record_every;
  if (!o.widths.empty()) cfg.widths = o.widths;
  cfg.tracked_neurons = o.tracked;
  cfg.edge_iters = o.edge_iters;
  cfg.seed = o.seed;
  cfg.workers = o.workers;
  const ex::ExportManifest manifest = ex::export_plots(cfg, o.out_dir());
  const std::vector<std::string> problems = ex::validate_export(o.out_dir());
  std::printf("files = %zu\nout = %s\n", manifest.files.size(), o.out_dir().string().c_str());
  for (const std::string& p : problems) std::fprintf(stderr, "invalid export: %s\n", p.c_str());
  return problems.empty() ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy gradient for scalar LQR with a ReLU controller"};
  app.set_config("--config", "", "flat TOML/INI file whose keys are option names");
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  add_options(app, o);

  CLI::App* riccati = app.add_subcommand("riccati", "optimal gain, value and residuals");
  CLI::App* grad = app.add_subcommand("grad-check", "analytic gradients against finite differences");
  CLI::App* init = app.add_subcommand("init-stats", "frequencies of the initialization events");
  CLI::App* train_cmd = app.add_subcommand("train", "one training run with telemetry CSVs");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "train over the (a, b) grid");
  CLI::App* regime = app.add_subcommand("regime", "constants ledger, verdicts and beta sweep");
  CLI::App* export_cmd = app.add_subcommand("export-plots", "CSV bundle for the plotting scripts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  // The ledger is stated for the width-scaled step unless --step-rule says otherwise.
  if (regime->parsed() && app.get_option("--step-rule")->count() == 0) {
    o.step_rule = "width_scaled";
  }

  try {
    validate(o.sys);
    if (riccati->parsed()) return cmd_riccati(o);
    if (grad->parsed()) return cmd_grad_check(o);
    if (init->parsed()) return cmd_init_stats(o);
    if (train_cmd->parsed()) return cmd_train(o);
    if (sweep_cmd->parsed()) return cmd_sweep(o);
    if (regime->parsed()) return cmd_regime(o);
    if (export_cmd->parsed()) return cmd_export(o);
  } catch (const InvalidInputError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kInvalid;
}
