/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aimc/experiments.hpp"
#include "aimc/inference.hpp"
#include "aimc/programming.hpp"

/**
 * CSV emission. All numeric formatting goes through snprintf with "%.10g" so
 * output bytes depend only on the values, not on stream state or locale
 * configuration done elsewhere (the writers assume the "C" numeric locale,
 * which the CLI never changes). Missing values (NaN losses, counters that do
 * not apply) are written as empty fields.
 */

namespace aimc {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return std::string(buf);
}

/// Empty field for NaN, "%.10g" otherwise.
inline std::string format_optional(double v) {
  return std::isnan(v) ? std::string() : format_double(v);
}

inline constexpr const char* kResultsCsvHeader =
    "scenario,seed,sweep,method,coord,eps_total,eps_nonlinear,eps_weight";

inline void write_results_csv(std::ostream& os, const std::vector<ResultRecord>& records) {
  os << kResultsCsvHeader << "\n";
  for (const ResultRecord& r : records) {
    os << r.scenario << ',' << r.seed << ',' << format_double(r.sweep) << ',' << r.method
       << ',' << format_double(r.coord) << ',' << format_double(r.eps_total) << ','
       << format_double(r.eps_nonlinear) << ',' << format_double(r.eps_weight) << "\n";
  }
}

inline constexpr const char* kSummaryCsvHeader =
    "scenario,method,sweep,n_seeds,eps_total_median,eps_total_iqr,eps_nonlinear_median,"
    "eps_nonlinear_iqr,eps_weight_median,eps_weight_iqr";

inline void write_summary_csv(std::ostream& os, const std::string& scenario,
                              const std::vector<SummaryRow>& rows) {
  os << kSummaryCsvHeader << "\n";
  for (const SummaryRow& r : rows) {
    os << scenario << ',' << r.method << ',' << format_double(r.sweep) << ',' << r.n << ','
       << format_double(r.median_eps_total) << ',' << format_double(r.iqr_eps_total) << ','
       << format_double(r.median_eps_nonlinear) << ',' << format_double(r.iqr_eps_nonlinear)
       << ',' << format_double(r.median_eps_weight) << ',' << format_double(r.iqr_eps_weight)
       << "\n";
  }
}

inline constexpr const char* kProgrammingLogCsvHeader =
    "iteration,loss,epsilon_total,clock_s,converged_cells";

inline void write_programming_log_csv(std::ostream& os, const ProgrammingLog& log) {
  os << kProgrammingLogCsvHeader << "\n";
  for (const LogRecord& r : log.records) {
    os << r.iteration << ',' << format_double(r.loss) << ',' << format_optional(r.eps_total)
       << ',' << format_double(r.clock_s) << ',';
    if (r.converged_cells >= 0) os << r.converged_cells;
    os << "\n";
  }
}

inline constexpr const char* kInferenceCsvHeader =
    "method,seed,layer,accuracy,eps_total,eps_nonlinear,eps_weight";

/// One row per (method, seed, layer); accuracy is the end-to-end test
/// accuracy of that method/seed, repeated on each of its layer rows.
inline void write_inference_csv(std::ostream& os,
                                const std::vector<MethodEvaluation>& evals) {
  os << kInferenceCsvHeader << "\n";
  for (const MethodEvaluation& ev : evals) {
    for (std::size_t l = 0; l < ev.layer_eps_total.size(); ++l) {
      os << ev.method << ',' << ev.seed << ',' << l << ',' << format_double(ev.accuracy)
         << ',' << format_optional(ev.layer_eps_total[l]) << ','
         << format_optional(ev.layer_eps_nonlinear[l]) << ','
         << format_optional(ev.layer_eps_weight[l]) << "\n";
    }
  }
}

namespace detail {
inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // binary: no newline translation
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}
}  // namespace detail

inline void save_results_csv(const std::string& path, const std::vector<ResultRecord>& r) {
  auto os = detail::open_for_write(path);
  write_results_csv(os, r);
}

inline void save_summary_csv(const std::string& path, const std::string& scenario,
                             const std::vector<SummaryRow>& r) {
  auto os = detail::open_for_write(path);
  write_summary_csv(os, scenario, r);
}

inline void save_programming_log_csv(const std::string& path, const ProgrammingLog& log) {
  auto os = detail::open_for_write(path);
  write_programming_log_csv(os, log);
}

inline void save_inference_csv(const std::string& path,
                               const std::vector<MethodEvaluation>& evals) {
  auto os = detail::open_for_write(path);
  write_inference_csv(os, evals);
}

}  // namespace aimc
