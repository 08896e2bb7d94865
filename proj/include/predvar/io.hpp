#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "predvar/estimation.hpp"

namespace predvar::io {

using Json = nlohmann::json;

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

/// Header row required; every later row must have as many numeric cells.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::istream& in, const std::string& source);

/// Shortest decimal that reads back to the same double.
std::string format_double(double x);

void write_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& values);

/// As above with a leading integer column holding first_index, first_index + 1, ...
void write_csv_indexed(std::ostream& out, const std::string& index_name, long first_index,
                       const std::vector<std::string>& header, const Matrix& values);

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const char* key);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const char* key);

struct Provenance {
  std::string command_line;
  std::string data_digest;
  std::string timestamp;
};

struct ModelDocument {
  PredVarModel model;
  FitReport report;
  Provenance provenance;
};

Json model_to_json(const PredVarModel& m, const FitReport& report, const Provenance& prov);
ModelDocument model_from_json(const Json& j);

std::string dump(const Json& j);
void save_model(const std::filesystem::path& path, const ModelDocument& doc);
ModelDocument load_model(const std::filesystem::path& path);

}  // namespace predvar::io
