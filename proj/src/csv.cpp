#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pvs/dataset.hpp"

namespace pvs {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(std::string_view cell, std::size_t line, const std::string& column) {
  double value = 0.0;
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(value)) {
    throw IoError("row " + std::to_string(line) + ": non-numeric value '" + std::string(cell) + "' in column '" +
                  column + "'");
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Parses `text` requiring the first `required` canonical columns. Returns the
// designs and, when targets are requested, the fifth column.
void parse(const std::string& text, const ColumnMap& columns, std::size_t required, std::vector<DesignPoint>& designs,
           std::vector<double>* targets) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("CSV input is empty (missing header)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = split_row(line);
  std::array<std::size_t, 5> position{};
  for (std::size_t c = 0; c < required; ++c) {
    const auto it = std::find(header.begin(), header.end(), columns.names[c]);
    if (it == header.end()) throw IoError("CSV is missing column '" + columns.names[c] + "'");
    position[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    std::array<double, 5> values{};
    for (std::size_t c = 0; c < required; ++c) {
      if (position[c] >= cells.size()) {
        throw IoError("row " + std::to_string(line_number) + ": missing value for column '" + columns.names[c] + "'");
      }
      values[c] = parse_cell(cells[position[c]], line_number, columns.names[c]) * columns.scale[c];
    }
    const DesignPoint design{values[0], values[1], values[2], values[3]};
    if (auto violation = design_violation(design); !violation.empty()) {
      throw IoError("row " + std::to_string(line_number) + ": " + violation);
    }
    designs.push_back(design);
    if (targets != nullptr) targets->push_back(values[4]);
  }
}

}  // namespace

std::string to_csv(const Dataset& data) {
  if (data.inputs.size() != data.targets.size()) throw DomainError("dataset inputs and targets differ in length");
  std::string out;
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    out += kCsvColumns[c];
    out += c + 1 < kCsvColumns.size() ? ',' : '\n';
  }
  char buffer[32];
  auto append = [&](double v, char sep) {
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    out += buffer;
    out += sep;
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& d = data.inputs[i];
    append(d.depth, ',');
    append(d.length, ',');
    append(d.thickness, ',');
    append(d.radius, ',');
    append(data.targets[i], '\n');
  }
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  const auto text = to_csv(data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Dataset parse_csv(const std::string& text, const ColumnMap& columns) {
  Dataset data;
  data.provenance = Provenance::imported;
  parse(text, columns, 5, data.inputs, &data.targets);
  return data;
}

Dataset read_csv(const std::filesystem::path& path, const ColumnMap& columns) {
  return parse_csv(read_file(path), columns);
}

std::vector<DesignPoint> read_designs_csv(const std::filesystem::path& path, const ColumnMap& columns) {
  std::vector<DesignPoint> designs;
  parse(read_file(path), columns, 4, designs, nullptr);
  return designs;
}

}  // namespace pvs
