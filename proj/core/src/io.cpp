#include "g0reg/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "g0reg/errors.hpp"

namespace g0reg::io {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string strip_json_suffix(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
    return path.substr(0, path.size() - 5);
  return path;
}

}  // namespace

std::optional<std::size_t> CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  return std::nullopt;
}

namespace {

double parse_cell(const std::string& s, const std::string& col, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw DomainError("non-numeric value '" + s + "' in column '" + col + "', data row " +
                    std::to_string(row + 1));
}

}  // namespace

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const auto idx = column_index(name);
  if (!idx) throw DomainError("no column named '" + name + "'");
  std::vector<double> out(cells.size());
  for (std::size_t r = 0; r < cells.size(); ++r) out[r] = parse_cell(cells[r][*idx], name, r);
  return out;
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw DomainError("read_csv: empty input");
  for (const auto& c : split(trim(line), ',')) t.columns.push_back(trim(c));
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty()) continue;
    auto row = split(s, ',');
    if (row.size() != t.columns.size())
      throw DomainError("read_csv: line " + std::to_string(lineno) + " has " +
                        std::to_string(row.size()) + " fields, expected " +
                        std::to_string(t.columns.size()));
    for (auto& c : row) c = trim(c);
    t.cells.push_back(std::move(row));
  }
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("cannot open CSV file: " + path);
  return read_csv(f);
}

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows) {
  std::ofstream f(path);
  if (!f) throw DomainError("cannot write CSV file: " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    f << header[i] << (i + 1 < header.size() ? "," : "");
  f << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i)
      f << fmt(r[i]) << (i + 1 < r.size() ? "," : "");
    f << '\n';
  }
}

Formula parse_formula(const std::string& text) {
  const auto tilde = text.find('~');
  if (tilde == std::string::npos)
    throw DomainError("formula must contain '~', got '" + text + "'");
  Formula f;
  f.response = trim(text.substr(0, tilde));
  if (f.response.empty()) throw DomainError("formula has no response name");
  const std::string rhs = trim(text.substr(tilde + 1));
  if (!rhs.empty() && rhs != "1") {
    for (const auto& term : split(rhs, '+')) {
      const std::string name = trim(term);
      if (name.empty()) throw DomainError("formula has an empty term: '" + text + "'");
      if (name != "1") f.covariates.push_back(name);
    }
  }
  return f;
}

RegressionSpec spec_from_table(const CsvTable& table, const Formula& formula, Link link,
                               std::optional<double> fix_looks) {
  if (!table.column_index(formula.response))
    throw DomainError("data has no column '" + formula.response + "' named in the formula");
  for (const auto& c : formula.covariates)
    if (!table.column_index(c))
      throw DomainError("data has no column '" + c + "' named in the formula");
  const std::vector<double> y = table.numeric_column(formula.response);
  std::vector<std::vector<double>> xcols;
  for (const auto& c : formula.covariates) xcols.push_back(table.numeric_column(c));
  const std::size_t n = table.n_rows();
  Eigen::MatrixXd X(n, xcols.size() + 1);
  Eigen::VectorXd z(n);
  for (std::size_t k = 0; k < n; ++k) {
    X(k, 0) = 1.0;
    for (std::size_t j = 0; j < xcols.size(); ++j) X(k, j + 1) = xcols[j][k];
    z(k) = y[k];
  }
  return RegressionSpec(std::move(X), std::move(z), link, fix_looks);
}

namespace {

void write_binary(const std::string& path, const std::vector<float>& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot write binary file: " + path);
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
}

std::vector<float> read_binary(const std::string& path, std::size_t count) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DomainError("cannot open binary file: " + path);
  std::vector<float> data(count);
  f.read(reinterpret_cast<char*>(data.data()),
         static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(f.gcount()) != count * sizeof(float))
    throw DomainError("binary file " + path + " is shorter than the sidecar declares");
  return data;
}

json read_sidecar(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("cannot open sidecar: " + path);
  json j;
  f >> j;
  if (j.value("dtype", "f32le") != "f32le")
    throw DomainError("sidecar " + path + ": only dtype f32le is supported");
  return j;
}

}  // namespace

Raster read_raster(const std::string& sidecar_path) {
  const json j = read_sidecar(sidecar_path);
  Raster r;
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  r.channels = j.at("channels").get<std::vector<std::string>>();
  r.looks = j.at("looks").get<double>();
  r.data = read_binary(strip_json_suffix(sidecar_path) + ".bin",
                       static_cast<std::size_t>(r.width) * r.height * r.channels.size());
  r.validate();
  return r;
}

void write_raster(const std::string& prefix, const Raster& r) {
  json j;
  j["width"] = r.width;
  j["height"] = r.height;
  j["channels"] = r.channels;
  j["dtype"] = "f32le";
  j["looks"] = r.looks;
  std::ofstream f(prefix + ".json");
  if (!f) throw DomainError("cannot write sidecar: " + prefix + ".json");
  f << j.dump(2) << '\n';
  write_binary(prefix + ".bin", r.data);
}

MapStack read_mapstack(const std::string& sidecar_path) {
  const json j = read_sidecar(sidecar_path);
  MapStack ms;
  ms.width = j.at("width").get<int>();
  ms.height = j.at("height").get<int>();
  ms.layers = j.at("layers").get<std::vector<std::string>>();
  ms.looks = j.at("looks").get<double>();
  ms.window = j.value("window", 0);
  ms.stride = j.value("stride", 1);
  ms.data = read_binary(strip_json_suffix(sidecar_path) + ".bin",
                        static_cast<std::size_t>(ms.width) * ms.height * ms.layers.size());
  return ms;
}

void write_mapstack(const std::string& prefix, const MapStack& ms) {
  json j;
  j["width"] = ms.width;
  j["height"] = ms.height;
  j["channels"] = ms.layers;  // readable as a plain raster too
  j["layers"] = ms.layers;
  j["dtype"] = "f32le";
  j["looks"] = ms.looks;
  j["window"] = ms.window;
  j["stride"] = ms.stride;
  std::ofstream f(prefix + ".json");
  if (!f) throw DomainError("cannot write sidecar: " + prefix + ".json");
  f << j.dump(2) << '\n';
  write_binary(prefix + ".bin", ms.data);
}

void write_layer_csv(const std::string& path, const MapStack& ms, const std::string& layer) {
  const int li = ms.layer_index(layer);
  if (li < 0) throw DomainError("write_layer_csv: no layer '" + layer + "'");
  std::ofstream f(path);
  if (!f) throw DomainError("cannot write CSV file: " + path);
  f << "x,y,value\n";
  for (int y = 0; y < ms.height; ++y)
    for (int x = 0; x < ms.width; ++x)
      f << x << ',' << y << ',' << fmt(ms.at(li, x, y)) << '\n';
}

std::string fit_result_json(const FitResult& fr, double ci_eps) {
  json j;
  j["schema_version"] = 1;
  switch (fr.family) {
    case FitFamily::G0: j["family"] = "g0"; break;
    case FitFamily::Gamma: j["family"] = "gamma"; break;
    case FitFamily::Exponential: j["family"] = "exponential"; break;
  }
  json theta;
  for (Eigen::Index i = 0; i < fr.estimates.size(); ++i)
    theta[fr.names[i]] = fr.estimates(i);
  j["theta"] = theta;
  j["loglik"] = fr.loglik;
  j["aic"] = fr.aic;
  j["aicc"] = fr.aicc;
  j["bic"] = fr.bic;
  j["convergence"] = {{"converged", fr.converged},
                      {"iterations", fr.iterations},
                      {"optimizer", optimizer_name(fr.optimizer)},
                      {"grad_norm", fr.grad_norm},
                      {"init_fallback", fr.init_fallback}};
  if (!fr.warning.empty()) j["warning"] = fr.warning;
  if (fr.converged && fr.cov.rows() == fr.estimates.size()) {
    std::vector<std::vector<double>> cov(fr.cov.rows(), std::vector<double>(fr.cov.cols()));
    for (Eigen::Index r = 0; r < fr.cov.rows(); ++r)
      for (Eigen::Index c = 0; c < fr.cov.cols(); ++c) cov[r][c] = fr.cov(r, c);
    j["cov"] = cov;
    json wald = json::array();
    for (const auto& row : wald_table(fr))
      wald.push_back({{"name", row.name},
                      {"estimate", row.estimate},
                      {"std_error", row.std_error},
                      {"t_stat", row.t_stat},
                      {"p_value", row.p_value}});
    j["wald"] = wald;
    json cis = json::array();
    const auto ci = confidence_intervals(fr, ci_eps);
    for (std::size_t i = 0; i < ci.size(); ++i)
      cis.push_back({{"name", fr.names[i]}, {"lo", ci[i].first}, {"hi", ci[i].second}});
    j["confidence_intervals"] = cis;
    j["ci_eps"] = ci_eps;
  }
  return j.dump(2) + "\n";
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json vec_to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace

std::string diagnostics_report_json(const DiagnosticsReport& rep) {
  json j;
  j["schema_version"] = 1;
  j["variance_defined"] = rep.variance_defined;
  j["mu_hat"] = vec_to_json(rep.mu_hat);
  if (rep.variance_defined) j["std_resid"] = vec_to_json(rep.std_resid);
  j["dev_resid"] = vec_to_json(rep.dev_resid);
  j["std_dev_resid"] = vec_to_json(rep.std_dev_resid);
  j["leverage"] = vec_to_json(rep.leverage);
  j["gl_diag"] = vec_to_json(rep.gl_diag);
  if (rep.variance_defined) {
    j["cook"] = vec_to_json(rep.cook);
    j["dffits"] = vec_to_json(rep.dffits);
  }
  if (!rep.envelope.observed.empty()) {
    j["envelope"] = {{"lower", vec_to_json(rep.envelope.lower)},
                     {"median", vec_to_json(rep.envelope.median)},
                     {"upper", vec_to_json(rep.envelope.upper)},
                     {"observed", vec_to_json(rep.envelope.observed)},
                     {"requested", rep.envelope.requested},
                     {"dropped", rep.envelope.dropped}};
  }
  json flags = json::array();
  for (const auto& f : rep.flags) flags.push_back(f);
  j["flags"] = flags;
  j["mab"] = rep.mab;
  j["rmse"] = rep.rmse;
  j["thresholds"] = {{"cook", rep.cook_threshold},
                     {"leverage", rep.leverage_threshold},
                     {"dffits", rep.dffits_threshold}};
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw DomainError("cannot write file: " + path);
  f << content;
}

void write_report_csv(const std::string& path, const RegressionSpec& spec,
                      const DiagnosticsReport& rep) {
  std::ofstream f(path);
  if (!f) throw DomainError("cannot write CSV file: " + path);
  f << "index,z,mu_hat,r,d_dev,sr,h,gl,cook,dffits,flags\n";
  const auto num = [&](const Eigen::VectorXd& v, Eigen::Index k) {
    return v.size() > k ? fmt(v(k)) : std::string("");
  };
  for (Eigen::Index k = 0; k < spec.n(); ++k) {
    f << k << ',' << fmt(spec.response()(k)) << ',' << fmt(rep.mu_hat(k)) << ','
      << num(rep.std_resid, k) << ',' << num(rep.dev_resid, k) << ','
      << num(rep.std_dev_resid, k) << ',' << num(rep.leverage, k) << ','
      << num(rep.gl_diag, k) << ',' << num(rep.cook, k) << ',' << num(rep.dffits, k) << ',';
    const auto& fl = rep.flags[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < fl.size(); ++i) f << fl[i] << (i + 1 < fl.size() ? ";" : "");
    f << '\n';
  }
}

void write_envelope_csv(const std::string& path, const EnvelopeBands& bands) {
  std::ofstream f(path);
  if (!f) throw DomainError("cannot write CSV file: " + path);
  f << "position,lower,median,upper,observed\n";
  for (std::size_t k = 0; k < bands.observed.size(); ++k)
    f << (k + 1) << ',' << fmt(bands.lower[k]) << ',' << fmt(bands.median[k]) << ','
      << fmt(bands.upper[k]) << ',' << fmt(bands.observed[k]) << '\n';
}

}  // namespace g0reg::io
