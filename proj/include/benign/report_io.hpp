#pragma once

// Text outputs: per-trial CSV, JSON summaries, two-column TSV plot data and the
// fixed-width tables printed by the command-line tool.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "benign/geometry_checks.hpp"
#include "benign/harness.hpp"

namespace benign {

/// %.17g, so values round-trip exactly and output is byte-stable.
std::string format_number(double v);

/// trial_index,seed,N,p,k_split,risk_total,risk_head,risk_tail,bias,variance,
/// interp_residual,check_flags,status. Wall time is left out so that re-runs
/// produce identical bytes.
void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                       bool write_header = true);
void write_experiment_csv(std::ostream& out, const ExperimentResult& r);

/// One "x<TAB>y" line per point with a "# x y" header line.
void write_tsv_curve(std::ostream& out, const std::string& x_name, const std::string& y_name,
                     const std::vector<std::pair<double, double>>& points);

void print_checks_table(std::ostream& out, const std::vector<CheckReport>& reports);
void print_rate_table(std::ostream& out, const RateReport& r, int N, int p);
void print_sweep_table(std::ostream& out, const SweepResult& s);
void print_compare_table(std::ostream& out, const CompareResult& c);
void print_point_summary(std::ostream& out, const PointResult& p);

/// Writes text to dir/name, creating dir. Returns the path written.
std::string write_file(const std::string& dir, const std::string& name, const std::string& text);

/// Emits records.csv / summary.json / plotdata files as selected by the flags.
std::vector<std::string> emit_experiment(const ExperimentResult& r, const std::string& dir,
                                         const EmitFlags& emit);
std::vector<std::string> emit_sweep(const SweepResult& s, const std::string& dir,
                                    const EmitFlags& emit);
std::vector<std::string> emit_compare(const CompareResult& c, const std::string& dir,
                                      const EmitFlags& emit);

}  // namespace benign
