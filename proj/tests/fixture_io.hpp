#pragma once

// Golden fixtures: '#' header lines (seed and provenance), then CSV rows of a
// text label followed by numbers printed with %.17g.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fixture {

struct Row {
  std::string label;
  std::vector<double> values;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  const Row& at(const std::string& label) const {
    for (const auto& r : rows) {
      if (r.label == label) return r;
    }
    throw std::runtime_error("fixture row '" + label + "' not found");
  }
};

inline std::string path(const std::string& name) { return std::string(COF_FIXTURE_DIR) + "/" + name; }

inline Table read(const std::string& name) {
  std::ifstream in(path(name));
  if (!in) throw std::runtime_error("missing fixture " + path(name));
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.header.push_back(line);
      continue;
    }
    std::stringstream ss(line);
    Row r;
    std::getline(ss, r.label, ',');
    std::string cell;
    while (std::getline(ss, cell, ',')) r.values.push_back(std::stod(cell));
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline void write(const std::string& file, const std::vector<std::string>& header, const std::vector<Row>& rows) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file);
  for (const auto& h : header) out << "# " << h << "\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.label;
    for (double v : r.values) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << "," << buf;
    }
    out << "\n";
  }
}

}  // namespace fixture
