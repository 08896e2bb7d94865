#include "predvar/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

namespace predvar::io {

namespace {

constexpr int kSchemaVersion = 1;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

[[noreturn]] void parse_error(const std::string& source, long line, long column, const std::string& what) {
  std::ostringstream msg;
  msg << source << ": row " << line << ", column " << column << ": " << what;
  throw Error(ErrorKind::CsvParse, msg.str());
}

const Json& member(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorKind::IoError, std::string("model file is missing '") + key + "'");
  }
  return j.at(key);
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  long line_no = 0;
  bool have_header = false;
  std::vector<double> flat;
  long rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      std::ostringstream msg;
      msg << "expected " << table.header.size() << " cells, found " << cells.size();
      parse_error(source, line_no, static_cast<long>(std::min(cells.size(), table.header.size())) + 1, msg.str());
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      double value = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      if (!cell.empty() && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        parse_error(source, line_no, static_cast<long>(c) + 1, "'" + cell + "' is not a finite number");
      }
      flat.push_back(value);
    }
    ++rows;
  }
  if (!have_header) throw Error(ErrorKind::CsvParse, source + ": missing header row");
  const auto cols = static_cast<Eigen::Index>(table.header.size());
  table.values.resize(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) table.values(i, j) = flat[static_cast<std::size_t>(i * cols + j)];
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return parse_csv(in, path.string());
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error(ErrorKind::IoError, "number formatting failed");
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values) {
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
}

void write_csv_indexed(std::ostream& out, const std::string& index_name, long first_index,
                       const std::vector<std::string>& header, const Matrix& values) {
  out << index_name;
  for (const std::string& h : header) out << ',' << h;
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << first_index + i;
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << ',' << format_double(values(i, j));
    out << '\n';
  }
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const Json& j, const char* key) {
  const Json& node = member(j, key);
  try {
    const auto rows = node.at("rows").get<Eigen::Index>();
    const auto cols = node.at("cols").get<Eigen::Index>();
    const Json& data = node.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
      throw Error(ErrorKind::IoError, std::string("matrix '") + key + "' has inconsistent size");
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data.at(static_cast<std::size_t>(i * cols + c)).get<double>();
    }
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::IoError, std::string("matrix '") + key + "': " + e.what());
  }
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j, const char* key) {
  const Json& node = member(j, key);
  try {
    Vector v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) v(static_cast<Eigen::Index>(i)) = node.at(i).get<double>();
    return v;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::IoError, std::string("vector '") + key + "': " + e.what());
  }
}

Json model_to_json(const PredVarModel& m, const FitReport& report, const Provenance& prov) {
  Json coefs = Json::array();
  for (const Matrix& b : m.coefs) coefs.push_back(matrix_to_json(b));
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["p"] = m.p;
  j["ell"] = m.ell;
  j["s"] = m.s;
  j["r"] = m.r;
  j["mean"] = vector_to_json(m.mean);
  j["U"] = matrix_to_json(m.norm.basis);
  j["D"] = vector_to_json(m.norm.eigenvalues);
  j["Utilde"] = matrix_to_json(m.norm.null_basis);
  j["rank_tol"] = m.norm.rank_tol;
  j["P"] = matrix_to_json(m.loadings);
  j["Pbar"] = matrix_to_json(m.static_loadings);
  j["R"] = matrix_to_json(m.weights);
  j["Rbar"] = matrix_to_json(m.static_weights);
  j["B"] = coefs;
  j["Sigma_eps"] = matrix_to_json(m.latent_innovation_cov);
  j["Sigma_epsbar"] = matrix_to_json(m.static_noise_cov);
  j["Sigma_e"] = matrix_to_json(m.innovation_cov);
  j["fit_report"] = {{"iterations", report.iterations},
                     {"converged", report.converged},
                     {"objective_trace", report.objective_trace},
                     {"final_spectrum", vector_to_json(report.final_spectrum)}};
  j["provenance"] = {{"command_line", prov.command_line},
                     {"data_digest", prov.data_digest},
                     {"timestamp", prov.timestamp}};
  return j;
}

ModelDocument model_from_json(const Json& j) {
  try {
    if (member(j, "schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorKind::IoError, "unsupported schema_version");
    }
    ModelDocument doc;
    PredVarModel& m = doc.model;
    m.p = member(j, "p").get<int>();
    m.ell = member(j, "ell").get<int>();
    m.s = member(j, "s").get<int>();
    m.r = member(j, "r").get<int>();
    m.mean = vector_from_json(j, "mean");
    m.norm.basis = matrix_from_json(j, "U");
    m.norm.eigenvalues = vector_from_json(j, "D");
    m.norm.null_basis = matrix_from_json(j, "Utilde");
    m.norm.rank_tol = j.value("rank_tol", 1e-10);
    m.norm.mean = m.mean;
    m.loadings = matrix_from_json(j, "P");
    m.static_loadings = matrix_from_json(j, "Pbar");
    m.weights = matrix_from_json(j, "R");
    m.static_weights = matrix_from_json(j, "Rbar");
    const Json& coefs = member(j, "B");
    for (std::size_t i = 0; i < coefs.size(); ++i) {
      m.coefs.push_back(matrix_from_json(Json{{"b", coefs.at(i)}}, "b"));
    }
    m.latent_innovation_cov = matrix_from_json(j, "Sigma_eps");
    m.static_noise_cov = matrix_from_json(j, "Sigma_epsbar");
    m.innovation_cov = matrix_from_json(j, "Sigma_e");
    if (static_cast<int>(m.coefs.size()) != m.s) {
      throw Error(ErrorKind::IoError, "B does not hold s matrices");
    }

    const Json& rep = member(j, "fit_report");
    doc.report.iterations = member(rep, "iterations").get<int>();
    doc.report.converged = member(rep, "converged").get<bool>();
    doc.report.objective_trace = member(rep, "objective_trace").get<std::vector<double>>();
    doc.report.final_spectrum = vector_from_json(rep, "final_spectrum");

    const Json& prov = member(j, "provenance");
    doc.provenance.command_line = member(prov, "command_line").get<std::string>();
    doc.provenance.data_digest = member(prov, "data_digest").get<std::string>();
    doc.provenance.timestamp = member(prov, "timestamp").get<std::string>();
    validate(m);
    return doc;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::IoError, std::string("malformed model file: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::IoError) throw;
    throw Error(ErrorKind::IoError, std::string("invalid model file: ") + e.what());
  }
}

std::string dump(const Json& j) {
  return j.dump(2) + "\n";
}

void save_model(const std::filesystem::path& path, const ModelDocument& doc) {
  write_file(path, dump(model_to_json(doc.model, doc.report, doc.provenance)));
}

ModelDocument load_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::IoError, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace predvar::io
