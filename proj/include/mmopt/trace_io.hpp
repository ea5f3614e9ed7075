#pragma once

#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "experiment.hpp"
#include "solver.hpp"

namespace mmopt {

// all exported reals carry 12 significant digits
inline std::string fmt12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') { out += "\\n"; continue; }
    out += c;
  }
  return out;
}

inline void write_trace_csv(std::ostream& os, const IterateTrace& trace) {
  os << "iter,objective,constraint_value,surrogate_bound,lambda,feasible,"
        "wall_ms\n";
  for (const IterateRecord& r : trace.records) {
    os << r.iter << ',' << fmt12(r.objective) << ','
       << fmt12(r.constraint_value) << ',' << fmt12(r.surrogate_bound) << ','
       << fmt12(r.lambda) << ',' << (r.feasible ? 1 : 0) << ','
       << fmt12(r.wall_ms) << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const ExperimentSummary& s) {
  os << "mse_constrained,mse_least_squares,win_rate,mean_iterations,"
        "n_failures\n";
  os << fmt12(s.mse_constrained) << ',' << fmt12(s.mse_least_squares) << ','
     << fmt12(s.win_rate) << ',' << fmt12(s.mean_iterations) << ','
     << s.n_failures << '\n';
}

inline void write_runs_csv(std::ostream& os, const ExperimentSummary& s) {
  os << "run_index,mse_constrained,mse_least_squares,iterations,"
        "final_objective,constraint_value,feasible,termination,"
        "ls_rank_deficient,failed,error\n";
  for (const RunRecord& r : s.per_run_records) {
    os << r.run_index << ',' << fmt12(r.mse_constrained) << ','
       << fmt12(r.mse_least_squares) << ',' << r.iterations << ','
       << fmt12(r.final_objective) << ',' << fmt12(r.constraint_value) << ','
       << (r.feasible ? 1 : 0) << ',' << csv_escape(r.termination) << ','
       << (r.ls_rank_deficient ? 1 : 0) << ',' << (r.failed ? 1 : 0) << ','
       << csv_escape(r.error) << '\n';
  }
}

inline void write_summary_jsonl(std::ostream& os, const ExperimentSummary& s) {
  os << "{\"mse_constrained\":" << fmt12(s.mse_constrained)
     << ",\"mse_least_squares\":" << fmt12(s.mse_least_squares)
     << ",\"win_rate\":" << fmt12(s.win_rate)
     << ",\"mean_iterations\":" << fmt12(s.mean_iterations)
     << ",\"n_failures\":" << s.n_failures << "}\n";
}

inline void write_runs_jsonl(std::ostream& os, const ExperimentSummary& s) {
  for (const RunRecord& r : s.per_run_records) {
    os << "{\"run_index\":" << r.run_index
       << ",\"mse_constrained\":" << fmt12(r.mse_constrained)
       << ",\"mse_least_squares\":" << fmt12(r.mse_least_squares)
       << ",\"iterations\":" << r.iterations
       << ",\"final_objective\":" << fmt12(r.final_objective)
       << ",\"constraint_value\":" << fmt12(r.constraint_value)
       << ",\"feasible\":" << (r.feasible ? "true" : "false")
       << ",\"termination\":\"" << json_escape(r.termination) << '"'
       << ",\"ls_rank_deficient\":" << (r.ls_rank_deficient ? "true" : "false")
       << ",\"failed\":" << (r.failed ? "true" : "false") << ",\"error\":\""
       << json_escape(r.error) << "\"}\n";
  }
}

inline void write_file(const std::string& path,
                       const std::function<void(std::ostream&)>& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  writer(os);
  if (!os) throw std::runtime_error("failed writing output file: " + path);
}

}  // namespace mmopt
