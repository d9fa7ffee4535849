#include "emdiff/tabular.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace emdiff {

void ColumnSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("ColumnSpec: empty name");
  if (kind == ColumnKind::categorical) {
    if (categories.size() < 2) {
      throw std::invalid_argument("column '" + name + "': categorical needs >= 2 categories");
    }
    for (std::size_t i = 0; i < categories.size(); ++i) {
      for (std::size_t j = i + 1; j < categories.size(); ++j) {
        if (categories[i] == categories[j]) {
          throw std::invalid_argument("column '" + name + "': duplicate category '" +
                                      categories[i] + "'");
        }
      }
    }
  }
}

void TabularDataset::validate() const {
  if (cells.cols() != static_cast<int>(specs.size())) {
    throw std::invalid_argument("TabularDataset: " + std::to_string(specs.size()) +
                                " specs for " + std::to_string(cells.cols()) + " columns");
  }
  require_same_shape(cells, missing, "TabularDataset missing flags");
  for (const auto& s : specs) s.validate();
  for (int j = 0; j < cols(); ++j) {
    const auto& spec = specs[j];
    for (int i = 0; i < rows(); ++i) {
      if (missing(i, j) != 0.0) continue;
      const double v = cells(i, j);
      if (spec.kind == ColumnKind::numeric) {
        if (!std::isfinite(v)) {
          throw std::invalid_argument("column '" + spec.name + "' row " +
                                      std::to_string(i) + ": non-finite value");
        }
      } else {
        const int idx = static_cast<int>(v);
        if (idx < 0 || idx >= static_cast<int>(spec.categories.size()) || v != idx) {
          throw std::invalid_argument("column '" + spec.name + "' row " +
                                      std::to_string(i) + ": invalid category index " +
                                      std::to_string(v));
        }
      }
    }
  }
}

int analog_bit_width(int categories) {
  if (categories < 2) throw std::invalid_argument("analog_bit_width: need >= 2 categories");
  return std::bit_width(static_cast<unsigned>(categories - 1));
}

std::vector<double> analog_bits(int index, int categories) {
  if (index < 0 || index >= categories) {
    throw std::invalid_argument("analog_bits: index " + std::to_string(index) +
                                " out of range for " + std::to_string(categories) +
                                " categories");
  }
  const int width = analog_bit_width(categories);
  std::vector<double> bits(width);
  for (int b = 0; b < width; ++b) {
    bits[b] = (index >> (width - 1 - b)) & 1;
  }
  return bits;
}

int analog_bits_decode(std::span<const double> vec, int categories) {
  const int width = analog_bit_width(categories);
  if (static_cast<int>(vec.size()) != width) {
    throw std::invalid_argument("analog_bits_decode: got " + std::to_string(vec.size()) +
                                " dims, expected " + std::to_string(width));
  }
  int raw = 0;
  for (int b = 0; b < width; ++b) {
    raw = (raw << 1) | (vec[b] > 0.5 ? 1 : 0);
  }
  return raw >= categories ? categories - 1 : raw;
}

int encoded_width(const std::vector<ColumnSpec>& specs) {
  int w = 0;
  for (const auto& s : specs) {
    w += s.kind == ColumnKind::numeric
             ? 1
             : analog_bit_width(static_cast<int>(s.categories.size()));
  }
  return w;
}

namespace {

std::vector<ColumnSpan> make_spans(const std::vector<ColumnSpec>& specs) {
  std::vector<ColumnSpan> spans(specs.size());
  int at = 0;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    const int w = specs[j].kind == ColumnKind::numeric
                      ? 1
                      : analog_bit_width(static_cast<int>(specs[j].categories.size()));
    spans[j] = {at, w};
    at += w;
  }
  return spans;
}

// Raw (pre-standardization) expansion plus span-replicated mask.
void expand(const TabularDataset& ds, const std::vector<ColumnSpan>& spans,
            Matrix& raw, Matrix& mask) {
  const int d = spans.empty() ? 0 : spans.back().begin + spans.back().width;
  raw = Matrix(ds.rows(), d);
  mask = Matrix(ds.rows(), d);
  for (int j = 0; j < ds.cols(); ++j) {
    const auto& spec = ds.specs[j];
    const auto& span = spans[j];
    for (int i = 0; i < ds.rows(); ++i) {
      const bool miss = ds.missing(i, j) != 0.0;
      if (spec.kind == ColumnKind::numeric) {
        raw(i, span.begin) = miss ? 0.0 : ds.cells(i, j);
        mask(i, span.begin) = miss ? 1.0 : 0.0;
      } else {
        std::vector<double> bits(span.width, 0.0);
        if (!miss) {
          bits = analog_bits(static_cast<int>(ds.cells(i, j)),
                             static_cast<int>(spec.categories.size()));
        }
        for (int b = 0; b < span.width; ++b) {
          raw(i, span.begin + b) = bits[b];
          mask(i, span.begin + b) = miss ? 1.0 : 0.0;
        }
      }
    }
  }
}

}  // namespace

EncodedMatrix encode(const TabularDataset& ds) {
  ds.validate();
  EncodedMatrix em;
  em.spans = make_spans(ds.specs);
  Matrix raw;
  expand(ds, em.spans, raw, em.mask);
  const int d = raw.cols();
  em.col_means.assign(d, 0.0);
  em.col_stds.assign(d, 1.0);

  for (std::size_t j = 0; j < ds.specs.size(); ++j) {
    const auto& span = em.spans[j];
    for (int c = span.begin; c < span.begin + span.width; ++c) {
      double sum = 0.0;
      int count = 0;
      for (int i = 0; i < raw.rows(); ++i) {
        if (em.mask(i, c) == 0.0) {
          sum += raw(i, c);
          ++count;
        }
      }
      if (count == 0) {
        throw std::invalid_argument("encode: column '" + ds.specs[j].name +
                                    "' has no observed cells");
      }
      const double mean = sum / count;
      double var = 0.0;
      for (int i = 0; i < raw.rows(); ++i) {
        if (em.mask(i, c) == 0.0) {
          const double dlt = raw(i, c) - mean;
          var += dlt * dlt;
        }
      }
      double std = std::sqrt(var / count);
      if (std <= 0.0) {
        std::fprintf(stderr,
                     "encode: column '%s' (encoded dim %d) has zero spread; "
                     "std forced to 1\n",
                     ds.specs[j].name.c_str(), c);
        std = 1.0;
      }
      em.col_means[c] = mean;
      em.col_stds[c] = std;
    }
  }

  em.values = Matrix(raw.rows(), d);
  for (int i = 0; i < raw.rows(); ++i) {
    for (int c = 0; c < d; ++c) {
      em.values(i, c) = em.mask(i, c) != 0.0
                            ? 0.0
                            : (raw(i, c) - em.col_means[c]) / em.col_stds[c];
    }
  }
  return em;
}

EncodedMatrix encode_with(const TabularDataset& ds, const EncodedMatrix& ref) {
  ds.validate();
  EncodedMatrix em;
  em.spans = make_spans(ds.specs);
  if (em.spans.size() != ref.spans.size()) {
    throw std::invalid_argument("encode_with: column count differs from reference encoding");
  }
  for (std::size_t j = 0; j < em.spans.size(); ++j) {
    if (em.spans[j].begin != ref.spans[j].begin ||
        em.spans[j].width != ref.spans[j].width) {
      throw std::invalid_argument("encode_with: span layout differs from reference at column " +
                                  std::to_string(j));
    }
  }
  Matrix raw;
  expand(ds, em.spans, raw, em.mask);
  em.col_means = ref.col_means;
  em.col_stds = ref.col_stds;
  em.values = Matrix(raw.rows(), raw.cols());
  for (int i = 0; i < raw.rows(); ++i) {
    for (int c = 0; c < raw.cols(); ++c) {
      em.values(i, c) = em.mask(i, c) != 0.0
                            ? 0.0
                            : (raw(i, c) - em.col_means[c]) / em.col_stds[c];
    }
  }
  return em;
}

TabularDataset decode(const EncodedMatrix& em, const std::vector<ColumnSpec>& specs) {
  const auto spans = make_spans(specs);
  if (spans.size() != em.spans.size()) {
    throw std::invalid_argument("decode: " + std::to_string(specs.size()) +
                                " specs for " + std::to_string(em.spans.size()) +
                                " encoded columns");
  }
  for (std::size_t j = 0; j < spans.size(); ++j) {
    if (spans[j].begin != em.spans[j].begin || spans[j].width != em.spans[j].width) {
      throw std::invalid_argument("decode: span mismatch at column " + std::to_string(j) +
                                  " (specs do not match the encoding)");
    }
  }
  TabularDataset ds;
  ds.specs = specs;
  ds.cells = Matrix(em.rows(), static_cast<int>(specs.size()));
  ds.missing = Matrix(em.rows(), static_cast<int>(specs.size()));
  std::vector<double> span_buf;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    const auto& span = em.spans[j];
    for (int i = 0; i < em.rows(); ++i) {
      if (specs[j].kind == ColumnKind::numeric) {
        const int c = span.begin;
        ds.cells(i, static_cast<int>(j)) =
            em.values(i, c) * em.col_stds[c] + em.col_means[c];
      } else {
        span_buf.resize(span.width);
        for (int b = 0; b < span.width; ++b) {
          const int c = span.begin + b;
          span_buf[b] = em.values(i, c) * em.col_stds[c] + em.col_means[c];
        }
        ds.cells(i, static_cast<int>(j)) = analog_bits_decode(
            span_buf, static_cast<int>(specs[j].categories.size()));
      }
    }
  }
  return ds;
}

}  // namespace emdiff
