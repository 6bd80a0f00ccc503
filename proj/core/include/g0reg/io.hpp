#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "g0reg/diagnostics.hpp"
#include "g0reg/raster.hpp"

// File formats: headered CSV with '.' decimals, UTF-8 JSON, and the raster
// sidecar convention (<name>.json describing a flat little-endian f32 binary
// <name>.bin, channel-major then row-major).

namespace g0reg::io {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> cells;  // row-major, untyped

  std::optional<std::size_t> column_index(const std::string& name) const;
  std::size_t n_rows() const { return cells.size(); }
  // parses the named column; throws DomainError naming the cell on failure
  std::vector<double> numeric_column(const std::string& name) const;
};

CsvTable read_csv(std::istream& is);
CsvTable read_csv_file(const std::string& path);
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows);

// minimal model formula: "response ~ cov1 + cov2"; "response ~" is
// intercept-only; the intercept is always implicit
struct Formula {
  std::string response;
  std::vector<std::string> covariates;
};
Formula parse_formula(const std::string& text);

RegressionSpec spec_from_table(const CsvTable& table, const Formula& formula, Link link,
                               std::optional<double> fix_looks);

// raster sidecar + binary
Raster read_raster(const std::string& sidecar_path);
void write_raster(const std::string& prefix, const Raster& r);
MapStack read_mapstack(const std::string& sidecar_path);
void write_mapstack(const std::string& prefix, const MapStack& ms);
void write_layer_csv(const std::string& path, const MapStack& ms, const std::string& layer);

// JSON payloads (schema_version field included)
std::string fit_result_json(const FitResult& fr, double ci_eps = 0.05);
std::string diagnostics_report_json(const DiagnosticsReport& rep);
void write_text_file(const std::string& path, const std::string& content);
void write_report_csv(const std::string& path, const RegressionSpec& spec,
                      const DiagnosticsReport& rep);
void write_envelope_csv(const std::string& path, const EnvelopeBands& bands);

}  // namespace g0reg::io
