#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbf/entropy.hpp"
#include "fbf/gram_field.hpp"
#include "fbf/measure.hpp"
#include "fbf/sampler.hpp"

namespace fbf {

// 17 significant digits, enough to round-trip a double.
std::string format_double(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells);
  void add_row(const std::vector<double>& values);

  std::string str() const;
  void write(const std::filesystem::path& path) const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

CsvTable read_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

// One atom per row: x_1..x_d, weight, value.
CsvTable index_function_csv(const IndexFunction& f);
IndexFunction read_index_function_csv(const std::filesystem::path& path);
nlohmann::json to_json(const MeasureSpace& space);
nlohmann::json to_json(const IndexFunction& f);
SpacePtr space_from_json(const nlohmann::json& doc);
IndexFunction index_function_from_json(const nlohmann::json& doc);

// Header: point labels; one sample per row.
CsvTable field_sample_csv(const FieldSample& sample);
nlohmann::json to_json(const Provenance& p);
nlohmann::json to_json(const FieldModel& model);
CsvTable profile_csv(const EntropyProfile& profile);

}  // namespace fbf
