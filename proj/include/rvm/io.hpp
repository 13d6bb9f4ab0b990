#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rvm/bench.hpp"
#include "rvm/gibbs.hpp"
#include "rvm/kernel.hpp"
#include "rvm/oracle.hpp"
#include "rvm/priors.hpp"

namespace rvm {

using Json = nlohmann::ordered_json;

/// Shortest round-trip formatting ("%.17g"): deterministic and lossless.
std::string format_double(double v);

/// Matrices serialize to CSV, row-major, with a "# n=<n> p=<p>" header line.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

void write_vector_csv(const std::filesystem::path& path, const Vector& v);
Vector read_vector_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

Json to_json(const SpectralCertificate& cert);
Json to_json(const SeparationReport& rep);
Json to_json(const OrthogonalityReport& rep);
Json to_json(const MomentReport& rep);
Json to_json(const ChainSummary& summary);
Json to_json(const OracleResult& result);
Json to_json(const RateFit& fit);
Json to_json(const Aggregate& agg);

/// Long-format cell CSV (one row per (n, replicate)) and its reader.
void write_cells_csv(const std::filesystem::path& path,
                     const std::vector<CellResult>& cells);
std::vector<CellResult> read_cells_csv(const std::filesystem::path& path);

/// Retained-draw trace dump: sigma^2 always, beta columns only for n <= 50
/// unless forced.
void write_trace_csv(const std::filesystem::path& path, const TraceSink& trace,
                     bool force_beta = false);

/// Two/three-column plot data (x, y[, se]), gnuplot-ready.
void write_curve(const std::filesystem::path& path,
                 const std::vector<std::array<double, 3>>& rows, bool with_se);

}  // namespace rvm
