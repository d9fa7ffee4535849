#include "emdiff/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace emdiff {

namespace {

constexpr std::uint32_t kParamsVersion = 1;
constexpr std::uint32_t kEmVersion = 1;

void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::istream& is, void* p, std::size_t n, const char* what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) {
    throw std::runtime_error(std::string("checkpoint: truncated file while reading ") + what);
  }
}

template <typename T>
void write_pod(std::ostream& os, T v) {
  write_bytes(os, &v, sizeof(v));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v;
  read_bytes(is, &v, sizeof(v), what);
  return v;
}

void write_params_body(std::ostream& os, const DenoiserParams& p) {
  write_pod<std::int64_t>(os, p.data_dim);
  write_pod<std::int64_t>(os, p.hidden_dim);
  p.for_each_tensor([&](std::span<const double> s) {
    write_bytes(os, s.data(), s.size() * sizeof(double));
  });
}

DenoiserParams read_params_body(std::istream& is) {
  const auto d = read_pod<std::int64_t>(is, "data_dim");
  const auto h = read_pod<std::int64_t>(is, "hidden_dim");
  if (d < 1 || h < 2 || d > (1 << 24) || h > (1 << 24)) {
    throw std::runtime_error("checkpoint: implausible dims " + std::to_string(d) +
                             ", " + std::to_string(h));
  }
  Rng dummy(0);
  DenoiserParams p = make_denoiser(static_cast<int>(d), static_cast<int>(h), dummy);
  p.for_each_tensor([&](std::span<double> s) {
    read_bytes(is, s.data(), s.size() * sizeof(double), "parameter tensor");
  });
  return p;
}

}  // namespace

void save_params(const DenoiserParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  os.write("EMDF", 4);
  write_pod<std::uint32_t>(os, kParamsVersion);
  write_params_body(os, params);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

DenoiserParams load_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[4];
  read_bytes(is, magic, 4, "magic");
  if (std::memcmp(magic, "EMDF", 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const auto version = read_pod<std::uint32_t>(is, "version");
  if (version != kParamsVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version) + " in " + path);
  }
  return read_params_body(is);
}

std::uint64_t params_digest(const DenoiserParams& params) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const std::int64_t dims[2] = {params.data_dim, params.hidden_dim};
  mix(dims, sizeof(dims));
  params.for_each_tensor([&](std::span<const double> s) {
    mix(s.data(), s.size() * sizeof(double));
  });
  return h;
}

void save_em_checkpoint(const EmCheckpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  os.write("EMCK", 4);
  write_pod<std::uint32_t>(os, kEmVersion);
  write_pod<std::int64_t>(os, ck.k);
  write_params_body(os, ck.params);
  write_pod<std::int64_t>(os, ck.x.rows());
  write_pod<std::int64_t>(os, ck.x.cols());
  write_bytes(os, ck.x.data(), ck.x.size() * sizeof(double));
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

EmCheckpoint load_em_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[4];
  read_bytes(is, magic, 4, "magic");
  if (std::memcmp(magic, "EMCK", 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const auto version = read_pod<std::uint32_t>(is, "version");
  if (version != kEmVersion) {
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version) + " in " + path);
  }
  EmCheckpoint ck;
  ck.k = static_cast<int>(read_pod<std::int64_t>(is, "iteration"));
  ck.params = read_params_body(is);
  const auto rows = read_pod<std::int64_t>(is, "rows");
  const auto cols = read_pod<std::int64_t>(is, "cols");
  if (rows < 0 || cols < 0 || rows > (1LL << 32) || cols > (1 << 24)) {
    throw std::runtime_error("checkpoint: implausible matrix shape in " + path);
  }
  ck.x = Matrix(static_cast<int>(rows), static_cast<int>(cols));
  read_bytes(is, ck.x.data(), ck.x.size() * sizeof(double), "matrix values");
  return ck;
}

std::string em_checkpoint_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "em_checkpoint_%04d.bin", k);
  return buf;
}

}  // namespace emdiff
