#pragma once

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scrl/sac/train.hpp"

namespace scrl::harness {

template <typename Scalar = double>
struct TimingConfigT {
  std::string label;
  sac::AgentStateT<Scalar> agent;
  env::AnyEnvT<Scalar> environment;
  sac::TrainConfigT<Scalar> train;
};

using TimingConfig = TimingConfigT<double>;

struct TimingRow {
  std::string label;
  std::vector<double> window_ms;
  double mean_ms = 0;
  double std_ms = 0;
  double ratio = 0;  // mean relative to the first config (the baseline)
};

struct TimingReport {
  long window_steps = 0;
  int n_windows = 0;
  std::vector<TimingRow> rows;
};

// Wall time per training window, measured after one untimed warmup window so
// buffers are filled and updates active.  The first config is the baseline
// for the overhead ratio.  Timing is the one intentionally nondeterministic
// harness output; it is reported, never asserted.
template <typename Scalar>
TimingReport timing_report(std::vector<TimingConfigT<Scalar>> configs,
                           long window_steps = 1000, int n_windows = 5) {
  if (configs.empty()) throw std::invalid_argument("timing: no configs");
  if (window_steps < 1 || n_windows < 1)
    throw std::invalid_argument("timing: window_steps and n_windows >= 1");

  TimingReport report;
  report.window_steps = window_steps;
  report.n_windows = n_windows;
  for (auto& config : configs) {
    sac::TrainLoopT<Scalar> loop(std::move(config.agent),
                                 std::move(config.environment),
                                 std::move(config.train));
    loop.run(window_steps);  // warmup, untimed
    TimingRow row;
    row.label = config.label;
    for (int w = 0; w < n_windows; ++w) {
      const auto t0 = std::chrono::steady_clock::now();
      loop.run(window_steps);
      const auto t1 = std::chrono::steady_clock::now();
      row.window_ms.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    double sum = 0;
    for (const double w : row.window_ms) sum += w;
    row.mean_ms = sum / row.window_ms.size();
    if (row.window_ms.size() > 1) {
      double ss = 0;
      for (const double w : row.window_ms)
        ss += (w - row.mean_ms) * (w - row.mean_ms);
      row.std_ms = std::sqrt(ss / (row.window_ms.size() - 1));
    }
    report.rows.push_back(std::move(row));
  }
  const double baseline = report.rows.front().mean_ms;
  for (auto& row : report.rows) row.ratio = row.mean_ms / baseline;
  return report;
}

inline void format_timing_table(std::ostream& os, const TimingReport& report) {
  os << "wall time per " << report.window_steps << " training steps, "
     << report.n_windows << " windows\n";
  os << std::left << std::setw(24) << "config" << std::right << std::setw(12)
     << "mean ms" << std::setw(12) << "std ms" << std::setw(10) << "ratio"
     << '\n';
  for (const auto& row : report.rows) {
    os << std::left << std::setw(24) << row.label << std::right << std::fixed
       << std::setprecision(2) << std::setw(12) << row.mean_ms << std::setw(12)
       << row.std_ms << std::setprecision(3) << std::setw(10) << row.ratio
       << '\n';
    os.unsetf(std::ios::fixed);
  }
}

inline void write_timing_csv(std::ostream& os, const TimingReport& report) {
  os << "label,window_steps,n_windows,mean_ms,std_ms,ratio\n";
  for (const auto& row : report.rows)
    os << row.label << ',' << report.window_steps << ',' << report.n_windows
       << ',' << row.mean_ms << ',' << row.std_ms << ',' << row.ratio << '\n';
}

}  // namespace scrl::harness
