#pragma once

#include <cstdint>
#include <string>

#include "emdiff/denoiser.hpp"

namespace emdiff {

// Parameter checkpoint, binary little-endian:
//   magic "EMDF" | u32 version (=1) | i64 data_dim | i64 hidden_dim |
//   tensors in for_each_tensor order, each as raw f64 values.
// Shapes are implied by (data_dim, hidden_dim); a size check on load rejects
// truncated or mismatched files.
void save_params(const DenoiserParams& params, const std::string& path);
DenoiserParams load_params(const std::string& path);

// FNV-1a over the serialized byte stream; used to assert read-only contracts
// and to stamp reports.
std::uint64_t params_digest(const DenoiserParams& params);

// EM loop snapshot: iteration index, parameters, and the current complete-data
// estimate. Written after every E-step so an interrupted run can resume.
//   magic "EMCK" | u32 version (=1) | i64 k | params as above (sans magic) |
//   i64 rows | i64 cols | raw f64 values.
struct EmCheckpoint {
  int k = 0;
  DenoiserParams params;
  Matrix x;
};

void save_em_checkpoint(const EmCheckpoint& ck, const std::string& path);
EmCheckpoint load_em_checkpoint(const std::string& path);

std::string em_checkpoint_name(int k);

}  // namespace emdiff
