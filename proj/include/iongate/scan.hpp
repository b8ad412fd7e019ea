#pragma once

// Detuning sweeps, optimum location and the figure/table reproductions.

#include "iongate/crystal.hpp"
#include "iongate/gate_physics.hpp"
#include "iongate/optimizer.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace iongate {

struct SweepSpec {
  int ions = 20;
  GatePair pair{9, 10};
  /// Gate times in units of tau0.
  std::vector<double> taus{2.0};
  double mu_min = 0.3;
  double mu_max = 12.0;
  int points = 2400;
  int segments = 1;
  double nbar = 3.0;
  std::optional<int> neighbors;
  bool refine = false;
  FidelityConvention convention = FidelityConvention::half_displacement;
  /// Worker threads; 0 picks the hardware concurrency.
  int threads = 0;
  std::string output;
};

/// Throws std::invalid_argument for an unusable spec.
void validate(const SweepSpec& spec);

/// Evenly spaced detunings, both ends included.
std::vector<double> mu_grid(const SweepSpec& spec);

struct ScanRecord {
  double mu = 0;
  double tau_over_tau0 = 0;
  int segments = 1;
  double fidelity = 0;
  double required_amp = 0;
  double spectator_fraction = 0;
  /// True when no amplitude choice produces a conditional phase.
  bool phase_null = false;
  Eigen::VectorXd amps;
};

/// One grid point: m = 1 normalizes the single pulse, m > 1 runs the optimizer.
ScanRecord evaluate_point(const Crystal& crystal, const SweepSpec& spec, double tau_over_tau0,
                          double mu);

/// Every (tau, mu) grid point, evaluated by a worker pool. Records come back
/// grouped by tau in spec order, each group sorted by mu.
std::vector<ScanRecord> sweep(const Crystal& crystal, const SweepSpec& spec);

/// Columns mu,tau_over_tau0,segments,fidelity,required_amp,spectator_fraction,
/// phase_null and amp_1..amp_m when m > 1. Phase-null rows leave the numeric
/// fields empty.
void write_csv(std::ostream& out, const std::vector<ScanRecord>& records);

/// 12 significant digits, the format of every emitted float.
std::string format_number(double value);

struct Optimum {
  double mu = 0;
  double fidelity = 0;
  std::size_t index = 0;
  bool boundary = false;
};

/// Local fidelity maxima above `floor` in mu-sorted records, refined by a
/// parabola through the three neighbouring points. Endpoint maxima are
/// reported without refinement and flagged as boundary.
std::vector<Optimum> locate_optima(const std::vector<ScanRecord>& records, double floor = 0.5);

/// Brent maximization of `objective` on [lo, hi].
Optimum refine_optimum(const std::function<double(double)>& objective, double lo, double hi);

/// Detuning window around the COM loop closure mu = 1 - l (2 pi / tau), half a
/// closure spacing on each side, clipped below at zero.
std::pair<double, double> closure_window(double tau_over_tau0, int l = 1);

struct Peak {
  ScanRecord record;
  bool boundary = false;
};

/// Best fidelity of the grid restricted to [mu_lo, mu_hi], polished by Brent's
/// method within one grid step of the best point.
Peak best_peak(const Crystal& crystal, const SweepSpec& spec, double tau_over_tau0, double mu_lo,
               double mu_hi);

/// f_1-normalized optimal sequences for each neighbour count in `scopes`
/// (the full crystal for n = N - 2).
std::map<int, Eigen::VectorXd> locality_sequences(const Crystal& crystal, const GatePair& pair,
                                                  double tau, double mu, int segments,
                                                  double nbar, const std::vector<int>& scopes);

struct ReproduceOptions {
  int threads = 0;
  int points = 2400;
};

/// Writes the CSV set for `figure` (fig1, fig2, fig3, tables, n40 or all)
/// into `out_dir` and returns the files written.
std::vector<std::filesystem::path> reproduce(const std::string& figure,
                                             const std::filesystem::path& out_dir,
                                             const ReproduceOptions& options = {});

}  // namespace iongate
