#include "benign/report_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "benign/errors.hpp"

namespace benign {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fixed(double v, int width, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%*.*g", width, precision, v);
  return buf;
}

std::string pad(const std::string& s, int width) {
  if (static_cast<int>(s.size()) >= width) return s;
  return s + std::string(static_cast<std::size_t>(width) - s.size(), ' ');
}

std::string opt(const std::optional<double>& v, int width) {
  return v ? fixed(*v, width) : pad(std::string(static_cast<std::size_t>(width - 1), ' ') + "-", width);
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                       bool write_header) {
  if (write_header) {
    out << "trial_index,seed,N,p,k_split,risk_total,risk_head,risk_tail,bias,variance,"
           "interp_residual,check_flags,status\n";
  }
  for (const auto& r : records) {
    out << r.trial_index << ',' << r.seed << ',' << r.N << ',' << r.p << ',' << r.k_split << ','
        << format_number(r.risk_total) << ',' << format_number(r.risk_head) << ','
        << format_number(r.risk_tail) << ',' << format_number(r.bias) << ','
        << format_number(r.variance) << ',' << format_number(r.interp_residual) << ','
        << csv_field(r.check_flags) << ',' << csv_field(r.status) << '\n';
  }
}

void write_experiment_csv(std::ostream& out, const ExperimentResult& r) {
  bool header = true;
  for (const auto& p : r.points) {
    write_records_csv(out, p.records, header);
    header = false;
  }
}

void write_tsv_curve(std::ostream& out, const std::string& x_name, const std::string& y_name,
                     const std::vector<std::pair<double, double>>& points) {
  out << "# " << x_name << '\t' << y_name << '\n';
  for (const auto& [x, y] : points) out << format_number(x) << '\t' << format_number(y) << '\n';
}

void print_checks_table(std::ostream& out, const std::vector<CheckReport>& reports) {
  out << pad("check", 20) << pad("trials", 8) << pad("passes", 8) << pad("rate", 10) << pad("need", 8)
      << "verdict  observed\n";
  for (const auto& r : reports) {
    out << pad(r.name, 20) << pad(std::to_string(r.n_trials), 8) << pad(std::to_string(r.passes), 8)
        << pad(fixed(r.pass_rate, 8, 4), 10) << pad(fixed(r.min_pass_rate, 6, 3), 8)
        << pad(r.pass ? "PASS" : "FAIL", 9);
    bool first = true;
    for (const auto& [k, v] : r.observed) {
      out << (first ? "" : " ") << k << '=' << fixed(v, 1, 5);
      first = false;
    }
    for (const auto& w : r.warnings) out << " [" << w << ']';
    out << '\n';
  }
}

void print_rate_table(std::ostream& out, const RateReport& r, int N, int p) {
  static const char* names[] = {"noise  sigma sqrt(k*/N)", "overfit sigma sqrt(N Tr S2)/Tr",
                                "tail bias", "head bias * Tr/N"};
  out << "N=" << N << "  p=" << p << "  k*=" << r.r_star.k_star << '\n';
  std::size_t active = 0;
  for (std::size_t i = 0; i < 4; ++i)
    if (r.r_star.terms[i] > r.r_star.terms[active]) active = i;
  for (std::size_t i = 0; i < 4; ++i) {
    out << "  " << pad(names[i], 34) << fixed(r.r_star.terms[i], 14, 8)
        << (i == active ? "  <- max" : "") << '\n';
  }
  out << "  " << pad("r*", 34) << fixed(r.r_star.value, 14, 8) << '\n';
  out << "  " << pad(std::string("square (case ") + to_string(r.square.square_case) + ")", 34)
      << fixed(r.square.value, 14, 8) << '\n';
  out << "  " << pad("full upper rate", 34) << fixed(r.square.full_value, 14, 8) << '\n';
  out << "  " << pad("price of overfitting", 34) << fixed(r.overfit_price, 14, 8) << '\n';
  out << "  " << pad("lower bound", 34) << opt(r.lower_bound, 14) << '\n';
  out << "  " << pad("bllt rate", 34) << fixed(r.baselines.bllt, 14, 8) << '\n';
  out << "  " << pad("tsigler rate", 34) << fixed(r.baselines.tsigler, 14, 8) << '\n';
  for (const auto& v : r.square.violations) out << "  ! " << v << '\n';
  for (const auto& n : r.notes) out << "  ! " << n << '\n';
}

void print_sweep_table(std::ostream& out, const SweepResult& s) {
  out << pad("N", 8) << pad("p", 10) << pad("k*", 6) << pad("median_risk", 14) << pad("r*", 14)
      << pad("median/r*^2", 14) << "lower_bound\n";
  for (const auto& r : s.rows) {
    out << pad(std::to_string(r.N), 8) << pad(std::to_string(r.p), 10)
        << pad(r.k_star ? std::to_string(*r.k_star) : "-", 6) << pad(fixed(r.median_risk, 12), 14)
        << pad(opt(r.r_star, 12), 14) << pad(opt(r.ratio, 12), 14) << opt(r.lower_bound, 12) << '\n';
  }
  out << "median risk strictly decreasing: " << (s.risk_decreasing ? "yes" : "no") << '\n';
  if (s.bo)
    out << "benign overfitting: " << (s.bo->benign ? "yes" : "no") << " (" << s.bo->reason << ")\n";
  else
    out << "benign overfitting: " << s.bo_note << '\n';
}

void print_compare_table(std::ostream& out, const CompareResult& c) {
  out << pad("N", 8) << pad("median_ref", 14) << pad("median_heavy", 14) << pad("ratio", 12)
      << "95% bootstrap CI\n";
  for (const auto& r : c.rows) {
    out << pad(std::to_string(r.N), 8) << pad(fixed(r.median_gaussian, 12), 14)
        << pad(fixed(r.median_heavy, 12), 14) << pad(fixed(r.ratio, 10), 12) << '['
        << fixed(r.ci_low, 1) << ", " << fixed(r.ci_high, 1) << "]\n";
  }
}

void print_point_summary(std::ostream& out, const PointResult& p) {
  out << "N=" << p.model.N << "  p=" << p.model.p() << "  |J|=" << p.split.head_dim()
      << "  trials=" << p.records.size() << "  failed=" << p.n_failed << '\n';
  out << "  risk mean=" << fixed(p.risk.mean, 1, 6) << "  median=" << fixed(p.risk.median, 1, 6)
      << "  q05=" << fixed(p.risk.q05, 1, 6) << "  q95=" << fixed(p.risk.q95, 1, 6) << '\n';
  if (p.rates) {
    const double r = p.rates->r_star.value;
    out << "  r*=" << fixed(r, 1, 6);
    if (r > 0.0) out << "  median/r*^2=" << fixed(p.risk.median / (r * r), 1, 6);
    out << '\n';
  }
  for (const auto& n : p.rate_notes) out << "  ! " << n << '\n';
  if (!p.checks.empty()) print_checks_table(out, p.checks);
}

std::string write_file(const std::string& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::kConfigError, "cannot create output directory '" + dir + "'");
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::kConfigError, "cannot write '" + path + "'");
  f << text;
  return path;
}

std::vector<std::string> emit_experiment(const ExperimentResult& r, const std::string& dir,
                                         const EmitFlags& emit) {
  std::vector<std::string> written;
  if (emit.csv) {
    std::ostringstream s;
    write_experiment_csv(s, r);
    written.push_back(write_file(dir, "records.csv", s.str()));
  }
  if (emit.json) written.push_back(write_file(dir, "summary.json", experiment_summary_to_json(r).dump(2) + "\n"));
  if (emit.plotdata) {
    for (const auto& p : r.points) {
      std::vector<std::pair<double, double>> curve;
      for (const auto& rec : p.records)
        if (rec.ok()) curve.emplace_back(rec.trial_index, rec.risk_total);
      std::ostringstream s;
      write_tsv_curve(s, "trial_index", "risk_total", curve);
      written.push_back(write_file(dir, "risk_N" + std::to_string(p.model.N) + ".tsv", s.str()));
    }
  }
  return written;
}

std::vector<std::string> emit_sweep(const SweepResult& sw, const std::string& dir,
                                    const EmitFlags& emit) {
  std::vector<std::string> written;
  if (emit.csv) {
    std::ostringstream s;
    write_experiment_csv(s, sw.experiment);
    written.push_back(write_file(dir, "records.csv", s.str()));
  }
  if (emit.json) written.push_back(write_file(dir, "summary.json", sweep_to_json(sw).dump(2) + "\n"));
  if (emit.plotdata) {
    std::vector<std::pair<double, double>> median, rstar2, ratio, lower;
    for (const auto& r : sw.rows) {
      median.emplace_back(r.N, r.median_risk);
      if (r.r_star) rstar2.emplace_back(r.N, *r.r_star * *r.r_star);
      if (r.ratio) ratio.emplace_back(r.N, *r.ratio);
      if (r.lower_bound) lower.emplace_back(r.N, *r.lower_bound);
    }
    auto curve = [&](const char* file, const char* y, const auto& pts) {
      std::ostringstream s;
      write_tsv_curve(s, "N", y, pts);
      written.push_back(write_file(dir, file, s.str()));
    };
    curve("median_risk.tsv", "median_risk", median);
    curve("r_star_sq.tsv", "r_star_sq", rstar2);
    curve("ratio.tsv", "median_over_r_star_sq", ratio);
    curve("lower_bound.tsv", "lower_bound", lower);
  }
  return written;
}

std::vector<std::string> emit_compare(const CompareResult& c, const std::string& dir,
                                      const EmitFlags& emit) {
  std::vector<std::string> written;
  if (emit.csv) {
    std::ostringstream a, b;
    write_experiment_csv(a, c.gaussian);
    write_experiment_csv(b, c.heavy);
    written.push_back(write_file(dir, "records_reference.csv", a.str()));
    written.push_back(write_file(dir, "records_heavy.csv", b.str()));
  }
  if (emit.json) written.push_back(write_file(dir, "compare.json", compare_to_json(c).dump(2) + "\n"));
  if (emit.plotdata) {
    std::vector<std::pair<double, double>> ratio, lo, hi;
    for (const auto& r : c.rows) {
      ratio.emplace_back(r.N, r.ratio);
      lo.emplace_back(r.N, r.ci_low);
      hi.emplace_back(r.N, r.ci_high);
    }
    for (auto [file, y, pts] : {std::tuple{"ratio.tsv", "median_ratio", &ratio},
                                std::tuple{"ci_low.tsv", "ci_low", &lo},
                                std::tuple{"ci_high.tsv", "ci_high", &hi}}) {
      std::ostringstream s;
      write_tsv_curve(s, "N", y, *pts);
      written.push_back(write_file(dir, file, s.str()));
    }
  }
  return written;
}

}  // namespace benign
