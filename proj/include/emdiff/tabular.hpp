#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emdiff/matrix.hpp"

namespace emdiff {

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  // Categorical only; first-appearance order, persisted so a test split is
  // encoded with the training split's category indices.
  std::vector<std::string> categories;

  void validate() const;
};

// Typed table with per-cell missing flags. Numeric cells hold the value,
// categorical cells hold the category index; missing cells hold 0 and must
// not be read.
struct TabularDataset {
  std::vector<ColumnSpec> specs;
  Matrix cells;    // rows x columns
  Matrix missing;  // rows x columns, 1 = missing

  int rows() const { return cells.rows(); }
  int cols() const { return cells.cols(); }
  void validate() const;
};

struct ColumnSpan {
  int begin = 0;
  int width = 0;
};

// The dataset mapped into the continuous space where the diffusion runs:
// categoricals expanded to analog bits, every encoded dimension standardized
// by the statistics of its observed entries, missing entries set to 0.
struct EncodedMatrix {
  Matrix values;                 // rows x d_encoded
  Matrix mask;                   // same shape, 1 = missing
  std::vector<ColumnSpan> spans; // parallel to specs
  std::vector<double> col_means; // per encoded dim
  std::vector<double> col_stds;  // per encoded dim, > 0

  int rows() const { return values.rows(); }
  int encoded_width() const { return values.cols(); }
};

// Width of the analog-bit code for C categories.
int analog_bit_width(int categories);

// Big-endian binary expansion of `index`, width ceil(log2 C).
std::vector<double> analog_bits(int index, int categories);

// Threshold each entry at 0.5, read as binary, clamp to C - 1. Total function.
int analog_bits_decode(std::span<const double> vec, int categories);

// Encode using statistics computed from this dataset's observed cells.
// A column with no observed cells is rejected; a numeric column with zero
// spread gets std forced to 1 (with a warning on stderr).
EncodedMatrix encode(const TabularDataset& ds);

// Encode with the spans/statistics of an already-encoded training set, so
// test rows live in the same standardized space. Cells must conform to the
// same specs (unseen categories were already rejected at dataset build time).
EncodedMatrix encode_with(const TabularDataset& ds, const EncodedMatrix& ref);

// Inverse map: de-standardize numerics, threshold-decode categoricals. Every
// cell is marked observed in the result; callers keep the original missing
// flags if they need them.
TabularDataset decode(const EncodedMatrix& em, const std::vector<ColumnSpec>& specs);

int encoded_width(const std::vector<ColumnSpec>& specs);

}  // namespace emdiff
