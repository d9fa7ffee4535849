#include "emdiff/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace emdiff {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

bool parse_number(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
  if (b == e) return false;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

std::string escape_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("csv: cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() && is.peek() == std::char_traits<char>::eof()) break;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw std::runtime_error("csv: " + path + " is empty (header required)");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw std::runtime_error("csv: " + path + " row " + std::to_string(i) + " has " +
                               std::to_string(rows[i].size()) + " fields, header has " +
                               std::to_string(rows[0].size()));
    }
  }
  return rows;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  double rt = 0.0;
  std::from_chars(buf, buf + n, rt);
  if (rt == v) {
    // prefer the shortest representation that still round-trips
    for (int prec = 1; prec < 17; ++prec) {
      char b2[32];
      const int n2 = std::snprintf(b2, sizeof(b2), "%.*g", prec, v);
      double rt2 = 0.0;
      std::from_chars(b2, b2 + n2, rt2);
      if (rt2 == v) return b2;
    }
  }
  return buf;
}

std::vector<ColumnSpec> load_schema(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("schema: cannot open " + path);
  json j;
  is >> j;
  if (!j.is_array()) throw std::runtime_error("schema: " + path + " must be a JSON array");
  std::vector<ColumnSpec> specs;
  for (const auto& item : j) {
    ColumnSpec s;
    s.name = item.at("name").get<std::string>();
    const std::string kind = item.at("kind").get<std::string>();
    if (kind == "numeric") {
      s.kind = ColumnKind::numeric;
    } else if (kind == "categorical") {
      s.kind = ColumnKind::categorical;
      if (item.contains("categories")) {
        s.categories = item["categories"].get<std::vector<std::string>>();
      }
    } else {
      throw std::runtime_error("schema: unknown kind '" + kind + "' for column '" +
                               s.name + "'");
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

void save_schema(const std::vector<ColumnSpec>& specs, const std::string& path) {
  json j = json::array();
  for (const auto& s : specs) {
    json item;
    item["name"] = s.name;
    item["kind"] = s.kind == ColumnKind::numeric ? "numeric" : "categorical";
    if (s.kind == ColumnKind::categorical) item["categories"] = s.categories;
    j.push_back(std::move(item));
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("schema: cannot write " + path);
  os << j.dump(2) << "\n";
}

TabularDataset load_csv(const std::string& path,
                        const std::vector<ColumnSpec>* schema) {
  const auto rows = read_rows(path);
  const auto& header = rows[0];
  const int ncols = static_cast<int>(header.size());
  const int nrows = static_cast<int>(rows.size()) - 1;

  std::vector<ColumnSpec> specs;
  if (schema) {
    if (static_cast<int>(schema->size()) != ncols) {
      throw std::runtime_error("csv: " + path + " has " + std::to_string(ncols) +
                               " columns, schema has " + std::to_string(schema->size()));
    }
    specs = *schema;
    for (int j = 0; j < ncols; ++j) {
      if (specs[j].name != header[j]) {
        throw std::runtime_error("csv: column " + std::to_string(j) + " is '" + header[j] +
                                 "' but schema says '" + specs[j].name + "'");
      }
    }
  } else {
    specs.resize(ncols);
    for (int j = 0; j < ncols; ++j) {
      specs[j].name = header[j];
      bool numeric = true;
      double tmp;
      for (int i = 0; i < nrows && numeric; ++i) {
        const auto& cell = rows[i + 1][j];
        if (!cell.empty() && !parse_number(cell, tmp)) numeric = false;
      }
      specs[j].kind = numeric ? ColumnKind::numeric : ColumnKind::categorical;
      std::fprintf(stderr, "csv: inferred column '%s' as %s\n", header[j].c_str(),
                   numeric ? "numeric" : "categorical");
    }
  }

  // Collect categories in first-appearance order where the schema left them open.
  for (int j = 0; j < ncols; ++j) {
    if (specs[j].kind != ColumnKind::categorical || !specs[j].categories.empty()) continue;
    for (int i = 0; i < nrows; ++i) {
      const auto& cell = rows[i + 1][j];
      if (cell.empty()) continue;
      if (std::find(specs[j].categories.begin(), specs[j].categories.end(), cell) ==
          specs[j].categories.end()) {
        specs[j].categories.push_back(cell);
      }
    }
  }

  TabularDataset ds;
  ds.specs = specs;
  ds.cells = Matrix(nrows, ncols);
  ds.missing = Matrix(nrows, ncols);
  for (int i = 0; i < nrows; ++i) {
    for (int j = 0; j < ncols; ++j) {
      const auto& cell = rows[i + 1][j];
      if (cell.empty()) {
        ds.missing(i, j) = 1.0;
        continue;
      }
      if (specs[j].kind == ColumnKind::numeric) {
        double v;
        if (!parse_number(cell, v)) {
          throw std::runtime_error("csv: column '" + specs[j].name + "' row " +
                                   std::to_string(i) + ": cannot parse '" + cell +
                                   "' as a number");
        }
        ds.cells(i, j) = v;
      } else {
        const auto it = std::find(specs[j].categories.begin(),
                                  specs[j].categories.end(), cell);
        if (it == specs[j].categories.end()) {
          throw std::runtime_error("csv: column '" + specs[j].name + "' row " +
                                   std::to_string(i) + ": unseen category '" + cell + "'");
        }
        ds.cells(i, j) =
            static_cast<double>(it - specs[j].categories.begin());
      }
    }
  }
  ds.validate();
  return ds;
}

void save_csv(const TabularDataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("csv: cannot write " + path);
  for (int j = 0; j < ds.cols(); ++j) {
    os << (j ? "," : "") << escape_csv(ds.specs[j].name);
  }
  os << "\n";
  for (int i = 0; i < ds.rows(); ++i) {
    for (int j = 0; j < ds.cols(); ++j) {
      if (j) os << ",";
      if (ds.missing(i, j) != 0.0) continue;
      if (ds.specs[j].kind == ColumnKind::numeric) {
        os << format_double(ds.cells(i, j));
      } else {
        os << escape_csv(ds.specs[j].categories[static_cast<int>(ds.cells(i, j))]);
      }
    }
    os << "\n";
  }
  if (!os) throw std::runtime_error("csv: write failed: " + path);
}

Matrix load_mask_csv(const std::string& path) {
  const auto rows = read_rows(path);
  const int ncols = static_cast<int>(rows[0].size());
  const int nrows = static_cast<int>(rows.size()) - 1;
  Matrix mask(nrows, ncols);
  for (int i = 0; i < nrows; ++i) {
    for (int j = 0; j < ncols; ++j) {
      const auto& cell = rows[i + 1][j];
      if (cell == "0") {
        mask(i, j) = 0.0;
      } else if (cell == "1") {
        mask(i, j) = 1.0;
      } else {
        throw std::runtime_error("mask: " + path + " row " + std::to_string(i) +
                                 " col " + std::to_string(j) + ": expected 0 or 1, got '" +
                                 cell + "'");
      }
    }
  }
  return mask;
}

void save_mask_csv(const Matrix& mask, const std::vector<std::string>& header,
                   const std::string& path) {
  if (static_cast<int>(header.size()) != mask.cols()) {
    throw std::invalid_argument("mask: header size " + std::to_string(header.size()) +
                                " does not match mask width " + std::to_string(mask.cols()));
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("mask: cannot write " + path);
  for (int j = 0; j < mask.cols(); ++j) os << (j ? "," : "") << escape_csv(header[j]);
  os << "\n";
  for (int i = 0; i < mask.rows(); ++i) {
    for (int j = 0; j < mask.cols(); ++j) {
      os << (j ? "," : "") << (mask(i, j) != 0.0 ? "1" : "0");
    }
    os << "\n";
  }
  if (!os) throw std::runtime_error("mask: write failed: " + path);
}

}  // namespace emdiff
