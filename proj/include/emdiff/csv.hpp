#pragma once

#include <string>
#include <vector>

#include "emdiff/tabular.hpp"

namespace emdiff {

// Data CSV: mandatory header row, missing cell = empty string. Column kinds
// come from a sidecar schema (JSON array of {name, kind, categories?}) or are
// inferred: a column whose non-empty cells all parse as numbers is numeric,
// anything else categorical with first-appearance category order. Inference
// is logged to stderr.
//
// Mask CSV: same header as the data file, cells are 0/1, 1 = missing.

std::vector<ColumnSpec> load_schema(const std::string& path);
void save_schema(const std::vector<ColumnSpec>& specs, const std::string& path);

TabularDataset load_csv(const std::string& path,
                        const std::vector<ColumnSpec>* schema = nullptr);
void save_csv(const TabularDataset& ds, const std::string& path);

Matrix load_mask_csv(const std::string& path);
void save_mask_csv(const Matrix& mask, const std::vector<std::string>& header,
                   const std::string& path);

// Shortest round-trip decimal formatting used for all CSV output.
std::string format_double(double v);

}  // namespace emdiff
