#include "iongate/scan.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace iongate {

namespace {

template <class Body>
void parallel_for(std::size_t count, int threads, Body body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> guard(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

OptimizeSpec optimize_spec(const SweepSpec& spec, double tau_over_tau0, double mu) {
  OptimizeSpec os;
  os.pair = spec.pair;
  os.tau = tau_over_tau0 * kTau0;
  os.mu = mu;
  os.segments = spec.segments;
  os.nbar = spec.nbar;
  os.neighbors = spec.neighbors;
  os.refine = spec.refine;
  os.convention = spec.convention;
  return os;
}

double score(const ScanRecord& r) {
  return r.phase_null ? -std::numeric_limits<double>::infinity() : r.fidelity;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string cell(const ScanRecord& r, double value) {
  return r.phase_null || !std::isfinite(value) ? std::string() : format_number(value);
}

const GatePair kCentre20{9, 10};

}  // namespace

void validate(const SweepSpec& spec) {
  if (spec.ions < 2) throw std::invalid_argument("sweep: need at least 2 ions");
  validate(spec.pair, spec.ions);
  if (spec.taus.empty()) throw std::invalid_argument("sweep: empty gate-time list");
  for (const double t : spec.taus) {
    if (!(t > 0)) throw std::invalid_argument("sweep: gate times must be positive");
  }
  if (spec.points < 2) throw std::invalid_argument("sweep: need at least 2 grid points");
  if (!(spec.mu_min > 0) || !(spec.mu_max > spec.mu_min)) {
    throw std::invalid_argument("sweep: detuning range must satisfy 0 < mu_min < mu_max");
  }
  if (spec.segments < 1) throw std::invalid_argument("sweep: segment count must be >= 1");
  if (!(spec.nbar >= 0)) throw std::invalid_argument("sweep: nbar must be non-negative");
}

std::vector<double> mu_grid(const SweepSpec& spec) {
  std::vector<double> grid(static_cast<std::size_t>(spec.points));
  const double step = (spec.mu_max - spec.mu_min) / (spec.points - 1);
  for (int i = 0; i < spec.points; ++i) grid[i] = spec.mu_min + step * i;
  grid.back() = spec.mu_max;
  return grid;
}

ScanRecord evaluate_point(const Crystal& crystal, const SweepSpec& spec, double tau_over_tau0,
                          double mu) {
  ScanRecord record;
  record.mu = mu;
  record.tau_over_tau0 = tau_over_tau0;
  record.segments = spec.segments;
  const OptimizeSpec os = optimize_spec(spec, tau_over_tau0, mu);
  const GateModel model = build_model(crystal, os);
  try {
    const OptimizeResult best = optimize(model, os);
    const GateOutcome outcome = model.evaluate_normalized(best.amps);
    record.fidelity = outcome.fidelity;
    record.required_amp = outcome.required_amp;
    // A restricted mode set has no COM mode to measure the share against.
    record.spectator_fraction = spec.neighbors ? std::numeric_limits<double>::quiet_NaN()
                                               : spectator_fraction(outcome);
    record.amps = outcome.amps;
  } catch (const GateError&) {
    record.phase_null = true;
  } catch (const OptimizeError&) {
    record.phase_null = true;
  }
  return record;
}

std::vector<ScanRecord> sweep(const Crystal& crystal, const SweepSpec& spec) {
  validate(spec);
  if (crystal.size() != spec.ions) throw std::invalid_argument("sweep: crystal size mismatch");
  const std::vector<double> grid = mu_grid(spec);
  std::vector<ScanRecord> records(spec.taus.size() * grid.size());
  parallel_for(records.size(), spec.threads, [&](std::size_t n) {
    records[n] = evaluate_point(crystal, spec, spec.taus[n / grid.size()], grid[n % grid.size()]);
  });
  return records;
}

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.12g", value);
  return buffer;
}

void write_csv(std::ostream& out, const std::vector<ScanRecord>& records) {
  int amp_columns = 0;
  for (const auto& r : records) {
    if (r.segments > 1) amp_columns = std::max(amp_columns, r.segments);
  }
  out << "mu,tau_over_tau0,segments,fidelity,required_amp,spectator_fraction,phase_null";
  for (int p = 1; p <= amp_columns; ++p) out << ",amp_" << p;
  out << '\n';
  for (const auto& r : records) {
    out << format_number(r.mu) << ',' << format_number(r.tau_over_tau0) << ',' << r.segments
        << ',' << cell(r, r.fidelity) << ',' << cell(r, r.required_amp) << ','
        << cell(r, r.spectator_fraction) << ',' << (r.phase_null ? 1 : 0);
    for (int p = 0; p < amp_columns; ++p) {
      out << ',';
      if (!r.phase_null && p < r.amps.size()) out << format_number(r.amps[p]);
    }
    out << '\n';
  }
}

std::vector<Optimum> locate_optima(const std::vector<ScanRecord>& records, double floor) {
  std::vector<Optimum> found;
  const std::size_t n = records.size();
  if (n == 0) return found;
  if (n == 1) {
    if (score(records[0]) > floor) found.push_back({records[0].mu, records[0].fidelity, 0, true});
    return found;
  }
  if (score(records[0]) > score(records[1]) && score(records[0]) > floor) {
    found.push_back({records[0].mu, records[0].fidelity, 0, true});
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double f0 = score(records[i - 1]);
    const double f1 = score(records[i]);
    const double f2 = score(records[i + 1]);
    if (!(f1 > floor && f1 > f0 && f1 >= f2)) continue;
    Optimum opt{records[i].mu, f1, i, false};
    // Vertex of the parabola through the three points.
    const double x0 = records[i - 1].mu;
    const double x1 = records[i].mu;
    const double x2 = records[i + 1].mu;
    const double d01 = (f1 - f0) / (x1 - x0);
    const double d12 = (f2 - f1) / (x2 - x1);
    const double curvature = (d12 - d01) / (x2 - x0);
    if (std::isfinite(f0) && std::isfinite(f2) && curvature < 0) {
      const double slope = d01 - curvature * (x0 + x1);  // f = c x^2 + slope x + const
      const double vertex = std::clamp(-slope / (2 * curvature), x0, x2);
      opt.mu = vertex;
      opt.fidelity = f1 + d01 * (vertex - x1) + curvature * (vertex - x0) * (vertex - x1);
    }
    found.push_back(opt);
  }
  if (score(records[n - 1]) > score(records[n - 2]) && score(records[n - 1]) > floor) {
    found.push_back({records[n - 1].mu, records[n - 1].fidelity, n - 1, true});
  }
  return found;
}

Optimum refine_optimum(const std::function<double(double)>& objective, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("refine_optimum: empty interval");
  std::uintmax_t iterations = 200;
  const auto [mu, value] = boost::math::tools::brent_find_minima(
      [&](double x) { return -objective(x); }, lo, hi,
      std::numeric_limits<double>::digits / 2, iterations);
  return {mu, -value, 0, false};
}

std::pair<double, double> closure_window(double tau_over_tau0, int l) {
  const double spacing = 1.0 / tau_over_tau0;  // 2 pi / tau in units of omega
  const double centre = 1.0 - l * spacing;
  return {std::max(0.0, centre - 0.5 * spacing), centre + 0.5 * spacing};
}

Peak best_peak(const Crystal& crystal, const SweepSpec& spec, double tau_over_tau0, double mu_lo,
               double mu_hi) {
  validate(spec);
  std::vector<double> window;
  for (const double mu : mu_grid(spec)) {
    if (mu >= mu_lo && mu <= mu_hi) window.push_back(mu);
  }
  if (window.empty()) throw std::invalid_argument("best_peak: no grid point in the window");
  std::vector<ScanRecord> records(window.size());
  parallel_for(window.size(), spec.threads, [&](std::size_t i) {
    records[i] = evaluate_point(crystal, spec, tau_over_tau0, window[i]);
  });
  const auto best = static_cast<std::size_t>(
      std::max_element(records.begin(), records.end(),
                       [](const ScanRecord& a, const ScanRecord& b) { return score(a) < score(b); }) -
      records.begin());
  Peak peak{records[best], best == 0 || best + 1 == records.size()};
  if (records[best].phase_null) return peak;

  const double step = (spec.mu_max - spec.mu_min) / (spec.points - 1);
  const double lo = std::max(mu_lo, records[best].mu - step);
  const double hi = std::min(mu_hi, records[best].mu + step);
  if (hi > lo) {
    const Optimum polished = refine_optimum(
        [&](double mu) { return score(evaluate_point(crystal, spec, tau_over_tau0, mu)); }, lo, hi);
    if (polished.fidelity > peak.record.fidelity) {
      peak.record = evaluate_point(crystal, spec, tau_over_tau0, polished.mu);
    }
  }
  return peak;
}

std::map<int, Eigen::VectorXd> locality_sequences(const Crystal& crystal, const GatePair& pair,
                                                  double tau, double mu, int segments,
                                                  double nbar, const std::vector<int>& scopes) {
  std::map<int, Eigen::VectorXd> sequences;
  for (const int n : scopes) {
    OptimizeSpec spec;
    spec.pair = pair;
    spec.tau = tau;
    spec.mu = mu;
    spec.segments = segments;
    spec.nbar = nbar;
    if (n < crystal.size() - 2) spec.neighbors = n;
    sequences[n] = ratio_normalized(optimize(crystal, spec).amps);
  }
  return sequences;
}

std::vector<std::filesystem::path> reproduce(const std::string& figure,
                                             const std::filesystem::path& out_dir,
                                             const ReproduceOptions& options) {
  static const std::vector<std::string> known{"fig1", "fig2", "fig3", "tables", "n40", "all"};
  if (std::find(known.begin(), known.end(), figure) == known.end()) {
    throw std::invalid_argument("unknown figure '" + figure +
                                "' (expected fig1, fig2, fig3, tables, n40 or all)");
  }
  std::filesystem::create_directories(out_dir);
  const bool all = figure == "all";
  std::vector<std::filesystem::path> written;

  SweepSpec base;
  base.points = options.points;
  base.threads = options.threads;

  std::optional<Crystal> crystal20;
  auto c20 = [&]() -> const Crystal& {
    if (!crystal20) crystal20 = make_crystal(20);
    return *crystal20;
  };

  if (all || figure == "fig1") {
    SweepSpec spec = base;
    spec.taus = {50, 5, 2, 1, 0.05};
    const auto records = sweep(c20(), spec);
    auto a = open_csv(out_dir / "fig1a.csv");
    auto b = open_csv(out_dir / "fig1b.csv");
    a << "mu,tau_over_tau0,fidelity\n";
    b << "mu,tau_over_tau0,required_amp\n";
    for (const auto& r : records) {
      a << format_number(r.mu) << ',' << format_number(r.tau_over_tau0) << ','
        << cell(r, r.fidelity) << '\n';
      b << format_number(r.mu) << ',' << format_number(r.tau_over_tau0) << ','
        << cell(r, r.required_amp) << '\n';
    }
    written.push_back(out_dir / "fig1a.csv");
    written.push_back(out_dir / "fig1b.csv");
  }

  if (all || figure == "fig2") {
    SweepSpec spec = base;
    spec.taus = {0.18, 0.1, 0.05};
    spec.segments = 5;
    const auto records = sweep(c20(), spec);
    auto a = open_csv(out_dir / "fig2a.csv");
    a << "mu,tau_over_tau0,fidelity\n";
    for (const auto& r : records) {
      a << format_number(r.mu) << ',' << format_number(r.tau_over_tau0) << ','
        << cell(r, r.fidelity) << '\n';
    }
    const auto sequences =
        locality_sequences(c20(), kCentre20, 0.1 * kTau0, 10.0, 5, 3.0, {0, 2, 4, 6, 18});
    auto b = open_csv(out_dir / "fig2b.csv");
    b << "segment_index,scope,amp_normalized\n";
    for (const auto& [n, seq] : sequences) {
      for (Eigen::Index p = 0; p < seq.size(); ++p) {
        b << p + 1 << ",n=" << n << ',' << format_number(seq[p]) << '\n';
      }
    }
    written.push_back(out_dir / "fig2a.csv");
    written.push_back(out_dir / "fig2b.csv");
  }

  if (all || figure == "fig3") {
    auto out = open_csv(out_dir / "fig3.csv");
    out << "mu,segments,fidelity\n";
    for (const int m : {1, 5, 13, 17}) {
      SweepSpec spec = base;
      spec.taus = {0.5};
      spec.segments = m;
      for (const auto& r : sweep(c20(), spec)) {
        out << format_number(r.mu) << ',' << m << ',' << cell(r, r.fidelity) << '\n';
      }
    }
    written.push_back(out_dir / "fig3.csv");
  }

  if (all || figure == "tables") {
    auto out = open_csv(out_dir / "acceptance.csv");
    out << "check,published,computed,mu\n";
    auto row = [&](const std::string& check, double published, double computed, double mu) {
      out << check << ',' << format_number(published) << ',' << format_number(computed) << ','
          << format_number(mu) << '\n';
    };
    // m = 1 peaks and spectator shares in the mu < omega branch.
    const std::vector<std::pair<double, double>> peaks{
        {2, 0.9997}, {1.5, 0.99}, {1, 0.80}, {0.05, 0.25}};
    for (const auto& [tau, published] : peaks) {
      const Peak p = best_peak(c20(), base, tau, base.mu_min, base.mu_max);
      row("peak_fidelity_tau" + format_number(tau), published, p.record.fidelity, p.record.mu);
    }
    const std::vector<std::pair<double, double>> shares{{50, 0.013}, {5, 0.10}, {2, 0.181}};
    for (const auto& [tau, published] : shares) {
      const auto [lo, hi] = closure_window(tau);
      const Peak p = best_peak(c20(), base, tau, std::max(lo, base.mu_min), hi);
      row("spectator_fraction_tau" + format_number(tau), published, p.record.spectator_fraction,
          p.record.mu);
    }
    for (const auto& [pair, published] :
         std::vector<std::pair<GatePair, double>>{{{0, 1}, 0.99}, {{0, 19}, 0.95}}) {
      SweepSpec spec = base;
      spec.pair = pair;
      const Peak p = best_peak(c20(), spec, 2, base.mu_min, base.mu_max);
      row("edge_pair_" + std::to_string(pair.i + 1) + "_" + std::to_string(pair.j + 1), published,
          p.record.fidelity, p.record.mu);
    }
    SweepSpec fast = base;
    fast.segments = 5;
    for (const double mu : {5.4, 7.0, 10.0, 10.7}) {
      const ScanRecord r = evaluate_point(c20(), fast, 0.1, mu);
      row("m5_tau0.1_mu" + format_number(mu), mu == 10.0 ? 0.9976 : 0.99, r.fidelity, mu);
    }
    row("local_frequency_n20", 9.2, local_frequency(c20(), 9), 0);
    written.push_back(out_dir / "acceptance.csv");
  }

  if (all || figure == "n40") {
    const Crystal c40 = make_crystal(40);
    const double w_local = local_frequency(c40, 19);
    SweepSpec spec = base;
    spec.ions = 40;
    spec.pair = {19, 20};
    spec.mu_max = 20.0;
    const Peak slow = best_peak(c40, spec, 1.7, spec.mu_min, spec.mu_max);
    spec.segments = 5;
    const Peak fast = best_peak(c40, spec, 1.0 / w_local, spec.mu_min, spec.mu_max);
    auto out = open_csv(out_dir / "n40.csv");
    out << "check,threshold,computed,mu,pass\n";
    out << "local_frequency_centre,16.7," << format_number(w_local) << ",,"
        << (std::abs(w_local - 16.7) <= 0.1 ? "pass" : "fail") << '\n';
    out << "m1_tau1.7_best_fidelity,0.988," << format_number(slow.record.fidelity) << ','
        << format_number(slow.record.mu) << ',' << (slow.record.fidelity > 0.988 ? "pass" : "fail")
        << '\n';
    out << "m5_tau_local_best_fidelity,0.996," << format_number(fast.record.fidelity) << ','
        << format_number(fast.record.mu) << ',' << (fast.record.fidelity > 0.996 ? "pass" : "fail")
        << '\n';
    written.push_back(out_dir / "n40.csv");
  }
  return written;
}

}  // namespace iongate
