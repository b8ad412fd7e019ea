// iongate: command-line front end for crystal modes, single gates, detuning
// sweeps, figure reproduction and the Fock-space oracle.

#include "iongate/crystal.hpp"
#include "iongate/gate_physics.hpp"
#include "iongate/io.hpp"
#include "iongate/optimizer.hpp"
#include "iongate/oracle.hpp"
#include "iongate/scan.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

using namespace iongate;
using nlohmann::json;

namespace {

void emit(const json& doc, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

FidelityConvention convention_from(const std::string& text) {
  return text == "full" ? FidelityConvention::full_displacement
                        : FidelityConvention::half_displacement;
}

struct GateArgs {
  int ions = 20;
  std::string pair = "10,11";
  double tau = 2.0;
  double mu = 0.5;
  int segments = 1;
  bool optimize = false;
  bool refine = false;
  std::string scope = "full";
  double nbar = 3.0;
  std::string convention = "half";
  std::string json_path;
};

int run_gate(const GateArgs& args) {
  const Crystal crystal = make_crystal(args.ions);
  OptimizeSpec spec;
  spec.pair = parse_pair(args.pair, args.ions);
  spec.tau = args.tau * kTau0;
  spec.mu = args.mu;
  spec.segments = args.segments;
  spec.nbar = args.nbar;
  spec.neighbors = parse_scope(args.scope);
  spec.refine = args.refine;
  spec.convention = convention_from(args.convention);
  const GateModel model = build_model(crystal, spec);

  json doc;
  Eigen::VectorXd amps = Eigen::VectorXd::Ones(args.segments);
  if (args.optimize) {
    const OptimizeResult result = optimize(model, spec);
    amps = result.amps;
    doc["optimize"] = to_json(result);
  }
  const GateOutcome outcome = model.evaluate_normalized(amps);
  doc["outcome"] = to_json(outcome);
  doc["outcome"]["amps"] = std::vector<double>(outcome.amps.data(),
                                               outcome.amps.data() + outcome.amps.size());
  // Only the full mode set has a COM mode to measure the spectator share against.
  const bool full = !spec.neighbors;
  doc["outcome"]["spectator_fraction"] = full ? json(spectator_fraction(outcome)) : json(nullptr);
  doc["convention"] = to_string(spec.convention);
  if (!args.json_path.empty()) emit(doc, args.json_path);
  std::printf("fidelity %.10f  phi %.10f  required_amp %.8g", outcome.fidelity, outcome.phi_total,
              outcome.required_amp);
  if (full) std::printf("  spectator %.6f", spectator_fraction(outcome));
  std::printf("\n");
  return 0;
}

struct SweepArgs {
  std::string config;
  int ions = 20;
  std::string pair = "10,11";
  double tau = 2.0;
  double mu_min = 0.3;
  double mu_max = 12.0;
  int points = 2400;
  int segments = 1;
  double nbar = 3.0;
  std::string scope = "full";
  bool refine = false;
  std::string convention = "half";
  int threads = 0;
  std::string csv;
};

int run_sweep(const SweepArgs& args, const CLI::App& cmd) {
  SweepSpec spec;
  if (!args.config.empty()) {
    std::ifstream in(args.config);
    if (!in) throw std::runtime_error("cannot read " + args.config);
    spec = sweep_spec_from_json(json::parse(in));
  }
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--ions")) spec.ions = args.ions;
  if (given("--pair")) spec.pair = parse_pair(args.pair, spec.ions);
  if (given("--tau")) spec.taus = {args.tau};
  if (given("--mu-min")) spec.mu_min = args.mu_min;
  if (given("--mu-max")) spec.mu_max = args.mu_max;
  if (given("--points")) spec.points = args.points;
  if (given("--segments")) spec.segments = args.segments;
  if (given("--nbar")) spec.nbar = args.nbar;
  if (given("--scope")) spec.neighbors = parse_scope(args.scope);
  if (given("--refine")) spec.refine = true;
  if (given("--convention")) spec.convention = convention_from(args.convention);
  if (given("--threads")) spec.threads = args.threads;
  if (given("--csv")) spec.output = args.csv;
  if (spec.output.empty()) throw std::invalid_argument("sweep: no output path (--csv)");

  const Crystal crystal = make_crystal(spec.ions);
  const auto records = sweep(crystal, spec);
  std::ofstream out(spec.output);
  if (!out) throw std::runtime_error("cannot write " + spec.output);
  write_csv(out, records);
  for (const auto& opt : locate_optima(records)) {
    std::printf("optimum mu %.6f  fidelity %.8f%s\n", opt.mu, opt.fidelity,
                opt.boundary ? "  (boundary)" : "");
  }
  return 0;
}

struct OracleArgs {
  int ions = 2;
  std::string pair = "1,2";
  double tau = 2.0;
  double mu = 0.5;
  int segments = 1;
  double nbar = 0.0;
  int cutoff = 40;
};

int run_oracle(const OracleArgs& args) {
  if (args.ions < 2 || args.ions > 3) throw std::invalid_argument("oracle: --ions must be 2 or 3");
  const Crystal crystal = make_crystal(args.ions);
  OptimizeSpec spec;
  spec.pair = parse_pair(args.pair, args.ions);
  spec.tau = args.tau * kTau0;
  spec.mu = args.mu;
  spec.segments = args.segments;
  spec.nbar = args.nbar;
  spec.convention = FidelityConvention::full_displacement;
  const OptimizeResult result = optimize(crystal, spec);

  OracleConfig config;
  config.schedule = PulseSchedule{spec.tau, spec.mu, result.amps};
  config.modes = crystal.modes;
  config.rows = spec.pair;
  config.nbar = args.nbar;
  config.fock_cutoff = args.cutoff;
  json doc = to_json(thermal_fidelity(config));
  doc["amps"] = std::vector<double>(result.amps.data(), result.amps.data() + result.amps.size());
  emit(doc, "-");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segmented-pulse CPF gates in linear ion crystals (units hbar = M = omega = 1)"};
  app.require_subcommand(1);

  int crystal_ions = 20;
  std::string crystal_json;
  auto* crystal_cmd = app.add_subcommand("crystal", "Equilibrium positions and normal modes");
  crystal_cmd->add_option("--ions", crystal_ions, "Number of ions")->required()->check(CLI::Range(2, 512));
  crystal_cmd->add_option("--json", crystal_json, "Write the crystal as JSON ('-' for stdout)");

  GateArgs gate;
  auto* gate_cmd = app.add_subcommand("gate", "Evaluate or optimize one gate");
  gate_cmd->add_option("--ions", gate.ions, "Number of ions")->required()->check(CLI::Range(2, 512));
  gate_cmd->add_option("--pair", gate.pair, "Gate ions I,J (1-based)")->required();
  gate_cmd->add_option("--tau", gate.tau, "Gate time in units of tau0 = 2 pi")->required();
  gate_cmd->add_option("--mu", gate.mu, "Detuning in units of omega")->required();
  gate_cmd->add_option("--segments", gate.segments, "Number of segments")->required()->check(CLI::PositiveNumber);
  gate_cmd->add_flag("--optimize", gate.optimize, "Optimize the segment amplitudes");
  gate_cmd->add_flag("--refine", gate.refine, "Polish the optimum with Nelder-Mead");
  gate_cmd->add_option("--scope", gate.scope, "Moving ions: full or n=K neighbours");
  gate_cmd->add_option("--nbar", gate.nbar, "COM mean phonon number")->required();
  gate_cmd->add_option("--convention", gate.convention, "Fidelity exponent convention")
      ->check(CLI::IsMember({"half", "full"}));
  gate_cmd->add_option("--json", gate.json_path, "Write the outcome as JSON ('-' for stdout)");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Detuning sweep to CSV");
  sweep_cmd->add_option("--config", sw.config, "JSON config mirroring the sweep fields");
  sweep_cmd->add_option("--ions", sw.ions, "Number of ions")->check(CLI::Range(2, 512));
  sweep_cmd->add_option("--pair", sw.pair, "Gate ions I,J (1-based)");
  sweep_cmd->add_option("--tau", sw.tau, "Gate time in units of tau0");
  sweep_cmd->add_option("--mu-min", sw.mu_min, "Lowest detuning");
  sweep_cmd->add_option("--mu-max", sw.mu_max, "Highest detuning");
  sweep_cmd->add_option("--points", sw.points, "Grid points");
  sweep_cmd->add_option("--segments", sw.segments, "Number of segments");
  sweep_cmd->add_option("--nbar", sw.nbar, "COM mean phonon number");
  sweep_cmd->add_option("--scope", sw.scope, "Moving ions: full or n=K neighbours");
  sweep_cmd->add_flag("--refine", sw.refine, "Polish every point with Nelder-Mead");
  sweep_cmd->add_option("--convention", sw.convention, "Fidelity exponent convention")
      ->check(CLI::IsMember({"half", "full"}));
  sweep_cmd->add_option("--threads", sw.threads, "Worker threads (0 = all cores)");
  sweep_cmd->add_option("--csv", sw.csv, "Output CSV path");

  std::string figure;
  std::string out_dir;
  ReproduceOptions repro;
  auto* repro_cmd = app.add_subcommand("reproduce", "Write figure and table CSVs");
  repro_cmd->add_option("figure", figure, "fig1, fig2, fig3, tables, n40 or all")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "fig3", "tables", "n40", "all"}));
  repro_cmd->add_option("--out", out_dir, "Output directory")->required();
  repro_cmd->add_option("--points", repro.points, "Grid points per sweep");
  repro_cmd->add_option("--threads", repro.threads, "Worker threads (0 = all cores)");

  OracleArgs orc;
  auto* oracle_cmd = app.add_subcommand("oracle", "Fock-space check of the analytic fidelity");
  oracle_cmd->add_option("--ions", orc.ions, "Number of ions (2 or 3)")->required();
  oracle_cmd->add_option("--pair", orc.pair, "Gate ions I,J (1-based)");
  oracle_cmd->add_option("--tau", orc.tau, "Gate time in units of tau0")->required();
  oracle_cmd->add_option("--mu", orc.mu, "Detuning in units of omega")->required();
  oracle_cmd->add_option("--segments", orc.segments, "Number of segments")->required()->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--nbar", orc.nbar, "COM mean phonon number")->required();
  oracle_cmd->add_option("--cutoff", orc.cutoff, "Initial Fock cutoff per mode");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*crystal_cmd) {
      const Crystal crystal = make_crystal(crystal_ions);
      if (!crystal_json.empty()) {
        emit(to_json(crystal), crystal_json);
      } else {
        const int centre = (crystal_ions - 1) / 2;
        std::printf("N=%d  u_1=%.12g  omega_max=%.12g  omega_L(ion %d)=%.12g\n", crystal_ions,
                    crystal.positions[0], crystal.modes.frequencies[crystal_ions - 1], centre + 1,
                    local_frequency(crystal, centre));
      }
      return 0;
    }
    if (*gate_cmd) return run_gate(gate);
    if (*sweep_cmd) return run_sweep(sw, *sweep_cmd);
    if (*repro_cmd) {
      for (const auto& path : reproduce(figure, out_dir, repro)) std::printf("%s\n", path.c_str());
      return 0;
    }
    if (*oracle_cmd) return run_oracle(orc);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "iongate: %s\n", e.what());
    return 1;
  }
  return 0;
}
