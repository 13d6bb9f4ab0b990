#include "rvm/io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rvm {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << "# n=" << m.rows() << " p=" << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
  if (!out) throw ConfigError("write failed: " + path.string());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path.string());
  std::string header;
  if (!std::getline(in, header))
    throw ConfigError("empty matrix file: " + path.string());
  long n = 0, p = 0;
  if (std::sscanf(header.c_str(), "# n=%ld p=%ld", &n, &p) != 2 || n < 1 || p < 1)
    throw ConfigError("bad matrix header (want '# n=<n> p=<p>'): " + path.string());
  Matrix m(n, p);
  std::string line;
  for (long i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw ConfigError("matrix file truncated: " + path.string());
    std::istringstream row(line);
    std::string tok;
    for (long j = 0; j < p; ++j) {
      if (!std::getline(row, tok, ','))
        throw ConfigError("matrix row too short: " + path.string());
      m(i, j) = std::strtod(tok.c_str(), nullptr);
    }
  }
  return m;
}

void write_vector_csv(const std::filesystem::path& path, const Vector& v) {
  write_matrix_csv(path, v);
}

Vector read_vector_csv(const std::filesystem::path& path) {
  Matrix m = read_matrix_csv(path);
  if (m.cols() != 1)
    throw ConfigError("expected a single-column vector file: " + path.string());
  return m.col(0);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw ConfigError("write failed: " + path.string());
}

Json to_json(const SpectralCertificate& cert) {
  return Json{{"lambda_min", cert.lambda_min},
              {"lambda_max", cert.lambda_max},
              {"c1", cert.c1},
              {"c2", cert.c2},
              {"satisfied", cert.satisfied}};
}

Json to_json(const SeparationReport& rep) {
  return Json{{"min_sq_distance", rep.min_sq_distance},
              {"threshold", rep.threshold},
              {"satisfied", rep.satisfied}};
}

Json to_json(const OrthogonalityReport& rep) {
  return Json{{"max_diag_dev", rep.max_diag_dev},
              {"max_offdiag", rep.max_offdiag},
              {"h", rep.h},
              {"k", rep.k},
              {"satisfied", rep.satisfied}};
}

Json to_json(const MomentReport& rep) {
  return Json{{"fourth_moment_finite", rep.fourth_moment_finite},
              {"inverse_second_finite", rep.inverse_second_finite},
              {"delta", rep.delta},
              {"one_plus_delta_finite", rep.one_plus_delta_finite},
              {"fourth_moment_estimate", rep.fourth_moment_estimate},
              {"inverse_second_estimate", rep.inverse_second_estimate},
              {"one_plus_delta_estimate", rep.one_plus_delta_estimate}};
}

namespace {

Json vec_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace

Json to_json(const ChainSummary& s) {
  return Json{{"rb_mean_Kbeta", vec_json(s.rb_mean_Kbeta)},
              {"rb_mean_beta", vec_json(s.rb_mean_beta)},
              {"rb_se_beta", vec_json(s.rb_se_beta)},
              {"draw_mean_beta", vec_json(s.draw_mean_beta)},
              {"draw_se_beta", vec_json(s.draw_se_beta)},
              {"trace_var_Kbeta", s.trace_var_Kbeta},
              {"trace_var_beta", s.trace_var_beta},
              {"sigma_sq_mean", s.sigma_sq_mean},
              {"sigma_sq_se", s.sigma_sq_se},
              {"sqdist_mean_Kbeta", s.sqdist_mean_Kbeta},
              {"se_sqdist_Kbeta", s.se_sqdist_Kbeta},
              {"tail_prob_Kbeta", s.tail_prob_Kbeta},
              {"se_tail_Kbeta", s.se_tail_Kbeta},
              {"tail_prob_beta", s.tail_prob_beta},
              {"se_tail_beta", s.se_tail_beta},
              {"ess_min", s.ess_min},
              {"rhat_max", s.rhat_max},
              {"n_kept", s.n_kept},
              {"degenerate_variance", s.degenerate_variance}};
}

Json to_json(const OracleResult& r) {
  return Json{{"mean_beta", vec_json(r.mean_beta)},
              {"mean_Kbeta", vec_json(r.mean_Kbeta)},
              {"trace_var_Kbeta", r.trace_var_Kbeta},
              {"trace_var_beta", r.trace_var_beta},
              {"sigma_sq_mean", r.sigma_sq_mean},
              {"log_normalizer", r.log_normalizer},
              {"edge_mass", r.edge_mass},
              {"grid", Json{{"nodes_per_dim", r.grid.nodes_per_dim},
                            {"lambda_lo", r.grid.lambda_lo},
                            {"lambda_hi", r.grid.lambda_hi},
                            {"transform", "log"}}}};
}

Json to_json(const RateFit& fit) {
  return Json{{"slope", fit.slope},
              {"intercept", fit.intercept},
              {"r_squared", fit.r_squared},
              {"points", fit.points}};
}

Json to_json(const Aggregate& a) {
  return Json{{"n", a.n},
              {"q", a.q},
              {"p", a.p},
              {"usable", a.usable},
              {"flagged", a.flagged},
              {"t1", a.t1},
              {"t2", a.t2},
              {"tau_sq", a.tau_sq},
              {"threshold", a.threshold},
              {"threshold_beta", a.threshold_beta},
              {"err_sq", a.err_sq},
              {"err_sq_se", a.err_sq_se},
              {"trace_var", a.trace_var},
              {"trace_var_se", a.trace_var_se},
              {"err_sq_beta", a.err_sq_beta},
              {"err_sq_beta_se", a.err_sq_beta_se},
              {"trace_var_beta", a.trace_var_beta},
              {"trace_var_beta_se", a.trace_var_beta_se},
              {"tail", a.tail},
              {"tail_se", a.tail_se},
              {"tail_beta", a.tail_beta},
              {"tail_beta_se", a.tail_beta_se},
              {"err_over_q", a.err_over_q},
              {"trace_over_q", a.trace_over_q},
              {"err_over_q_t2sq", a.err_over_q_t2sq},
              {"err_over_q_logratio", a.err_over_q_logratio},
              {"err_beta_normalized", a.err_beta_normalized}};
}

namespace {

constexpr const char* kCellHeader =
    "n,replicate,q,p,theta,t1,t2,tau_sq,err_sq,trace_var,err_sq_beta,"
    "trace_var_beta,tail_prob,se_tail,tail_prob_beta,se_tail_beta,threshold,"
    "threshold_beta,sqdist_mean,se_sqdist,ess_min,rhat,flagged,flag_reason,seed";

std::string sanitize_reason(std::string s) {
  for (auto& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace

void write_cells_csv(const std::filesystem::path& path,
                     const std::vector<CellResult>& cells) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << kCellHeader << "\n";
  for (const auto& c : cells) {
    out << c.n << "," << c.replicate << "," << c.q << "," << c.p << ","
        << format_double(c.theta) << "," << format_double(c.t1) << ","
        << format_double(c.t2) << "," << format_double(c.tau_sq) << ","
        << format_double(c.err_sq) << "," << format_double(c.trace_var) << ","
        << format_double(c.err_sq_beta) << "," << format_double(c.trace_var_beta)
        << "," << format_double(c.tail_prob) << "," << format_double(c.se_tail)
        << "," << format_double(c.tail_prob_beta) << ","
        << format_double(c.se_tail_beta) << "," << format_double(c.threshold)
        << "," << format_double(c.threshold_beta) << ","
        << format_double(c.sqdist_mean) << "," << format_double(c.se_sqdist) << ","
        << format_double(c.ess_min) << "," << format_double(c.rhat) << ","
        << (c.flagged ? 1 : 0) << "," << sanitize_reason(c.flag_reason) << ","
        << c.seed << "\n";
  }
  if (!out) throw ConfigError("write failed: " + path.string());
}

std::vector<CellResult> read_cells_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCellHeader)
    throw ConfigError("unexpected cell CSV header in " + path.string());
  std::vector<CellResult> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(row, tok, ',')) toks.push_back(tok);
    if (toks.size() != 25)
      throw ConfigError("bad cell CSV row in " + path.string());
    CellResult c;
    int k = 0;
    const auto d = [&](int i) { return std::strtod(toks[static_cast<size_t>(i)].c_str(), nullptr); };
    c.n = static_cast<int>(d(k++));
    c.replicate = static_cast<int>(d(k++));
    c.q = static_cast<int>(d(k++));
    c.p = static_cast<int>(d(k++));
    c.theta = d(k++);
    c.t1 = d(k++);
    c.t2 = d(k++);
    c.tau_sq = d(k++);
    c.err_sq = d(k++);
    c.trace_var = d(k++);
    c.err_sq_beta = d(k++);
    c.trace_var_beta = d(k++);
    c.tail_prob = d(k++);
    c.se_tail = d(k++);
    c.tail_prob_beta = d(k++);
    c.se_tail_beta = d(k++);
    c.threshold = d(k++);
    c.threshold_beta = d(k++);
    c.sqdist_mean = d(k++);
    c.se_sqdist = d(k++);
    c.ess_min = d(k++);
    c.rhat = d(k++);
    c.flagged = toks[static_cast<size_t>(k++)] == "1";
    c.flag_reason = toks[static_cast<size_t>(k++)];
    c.seed = std::strtoull(toks[static_cast<size_t>(k++)].c_str(), nullptr, 10);
    cells.push_back(std::move(c));
  }
  return cells;
}

void write_trace_csv(const std::filesystem::path& path, const TraceSink& trace,
                     bool force_beta) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  const long n = trace.beta.empty() ? 0 : trace.beta.front().size();
  const bool with_beta = force_beta || n <= 50;
  out << "sigma_sq";
  if (with_beta)
    for (long i = 0; i < n; ++i) out << ",beta" << (i + 1);
  out << "\n";
  for (size_t t = 0; t < trace.sigma_sq.size(); ++t) {
    out << format_double(trace.sigma_sq[t]);
    if (with_beta)
      for (long i = 0; i < n; ++i) out << "," << format_double(trace.beta[t](i));
    out << "\n";
  }
  if (!out) throw ConfigError("write failed: " + path.string());
}

void write_curve(const std::filesystem::path& path,
                 const std::vector<std::array<double, 3>>& rows, bool with_se) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << (with_se ? "# x y se\n" : "# x y\n");
  for (const auto& r : rows) {
    out << format_double(r[0]) << " " << format_double(r[1]);
    if (with_se) out << " " << format_double(r[2]);
    out << "\n";
  }
  if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace rvm
