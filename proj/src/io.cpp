#include "fbf/io.hpp"

#include <cstdio>
#include <algorithm>
#include <fstream>
#include <sstream>

#include "fbf/error.hpp"

namespace fbf {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) fail(ErrorCode::LengthMismatch, "CSV row width differs from the header");
  rows_.push_back(std::move(cells));
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  add_row(std::move(cells));
}

std::string CsvTable::str() const {
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return os.str();
}

void CsvTable::write(const std::filesystem::path& path) const { write_text(path, str()); }

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Io, "empty CSV file " + path.string());
  CsvTable table(split(line));
  while (std::getline(in, line)) {
    if (!line.empty()) table.add_row(split(line));
  }
  return table;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

CsvTable index_function_csv(const IndexFunction& f) {
  const auto& space = *f.space();
  std::vector<std::string> header;
  for (std::size_t a = 0; a < space.dim(); ++a) header.push_back("x" + std::to_string(a + 1));
  header.push_back("weight");
  header.push_back("value");
  CsvTable table(header);
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::vector<double> row(space.atom(i).begin(), space.atom(i).end());
    row.push_back(space.weight(i));
    row.push_back(f[i]);
    table.add_row(row);
  }
  return table;
}

IndexFunction read_index_function_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  const auto width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (width < 2) fail(ErrorCode::InvalidConfig, "index function CSV needs weight and value columns");
  const std::size_t dim = width - 2;
  std::vector<double> coords;
  std::vector<double> weights;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != width) fail(ErrorCode::LengthMismatch, "ragged index function CSV");
    coords.insert(coords.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(dim));
    weights.push_back(row[dim]);
    values.push_back(row[dim + 1]);
  }
  auto space = std::make_shared<const MeasureSpace>(dim, std::move(coords), std::move(weights));
  return IndexFunction(space, std::move(values));
}

nlohmann::json to_json(const MeasureSpace& space) {
  return {{"dim", space.dim()},
          {"coords", std::vector<double>(space.coords().begin(), space.coords().end())},
          {"weights", std::vector<double>(space.weights().begin(), space.weights().end())}};
}

nlohmann::json to_json(const IndexFunction& f) {
  return {{"space", to_json(*f.space())}, {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

SpacePtr space_from_json(const nlohmann::json& doc) {
  try {
    return std::make_shared<const MeasureSpace>(doc.at("dim").get<std::size_t>(),
                                                doc.at("coords").get<std::vector<double>>(),
                                                doc.at("weights").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("bad measure space JSON: ") + e.what());
  }
}

IndexFunction index_function_from_json(const nlohmann::json& doc) {
  try {
    return IndexFunction(space_from_json(doc.at("space")), doc.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidConfig, std::string("bad index function JSON: ") + e.what());
  }
}

CsvTable field_sample_csv(const FieldSample& sample) {
  std::vector<std::string> header;
  for (const auto& p : sample.points) header.push_back("h=" + format_double(p.h) + ";" + p.label);
  CsvTable table(header);
  for (Eigen::Index r = 0; r < sample.values.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(sample.values.cols()));
    for (Eigen::Index c = 0; c < sample.values.cols(); ++c) row[static_cast<std::size_t>(c)] = sample.values(r, c);
    table.add_row(row);
  }
  return table;
}

namespace {

std::string hex64(std::uint64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace

nlohmann::json to_json(const Provenance& p) {
  return {{"model_fingerprint", hex64(p.model_fingerprint)},
          {"seed", p.seed},
          {"stream_id", p.stream_id},
          {"jitter", p.jitter},
          {"generator", p.generator},
          {"normal_method", p.normal_method}};
}

nlohmann::json to_json(const FieldModel& model) {
  nlohmann::json corners = nlohmann::json::array();
  for (const auto& c : model.basis_corners()) corners.push_back(c.coords);
  const auto& q = model.quadrature();
  return {{"basis_size", model.basis_size()},
          {"dyadics", std::vector<double>(model.dyadics().begin(), model.dyadics().end())},
          {"basis", {{"kind", "dyadic_rectangle_indicators"}, {"corners", corners}}},
          {"quadrature",
           {{"nodes", q.nodes}, {"kernel_nodes", q.kernel_nodes}, {"tolerance", q.tolerance},
            {"zero_levels", q.zero_levels}}},
          {"atoms", model.space()->size()},
          {"cached_h", model.cached_h()},
          {"fingerprint", hex64(model.fingerprint())}};
}

CsvTable profile_csv(const EntropyProfile& profile) {
  CsvTable table({"eps", "covering_upper", "covering_lower", "packing", "trusted"});
  for (std::size_t k = 0; k < profile.epsilons.size(); ++k) {
    table.add_row({format_double(profile.epsilons[k]), std::to_string(profile.upper[k]),
                   std::to_string(profile.lower[k]), std::to_string(profile.packing[k]),
                   profile.trusted[k] ? "1" : "0"});
  }
  return table;
}

}  // namespace fbf
