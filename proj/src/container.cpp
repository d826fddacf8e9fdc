#include "icorr/container.hpp"

#include <cstring>
#include <fstream>

#include "icorr/common.hpp"

namespace icorr {

namespace {
constexpr char kMagic[4] = {'I', 'C', 'A', 'R'};
}

size_t dtype_size(Dtype t) {
  switch (t) {
    case Dtype::f64:
    case Dtype::i64:
      return 8;
    case Dtype::f32:
    case Dtype::i32:
      return 4;
    case Dtype::u8:
      return 1;
  }
  throw DataError("unknown dtype code");
}

uint64_t Blob::element_count() const {
  uint64_t n = 1;
  for (uint64_t d : dims) n *= d;
  return n;
}

Blob Blob::from_matrix(const Eigen::MatrixXd& m) {
  Blob b;
  b.dtype = Dtype::f64;
  b.dims = {static_cast<uint64_t>(m.rows()), static_cast<uint64_t>(m.cols())};
  b.data.resize(sizeof(double) * m.size());
  // Row-major on disk.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  std::memcpy(b.data.data(), rm.data(), b.data.size());
  return b;
}

Blob Blob::from_matrix_i32(const Eigen::MatrixXi& m) {
  Blob b;
  b.dtype = Dtype::i32;
  b.dims = {static_cast<uint64_t>(m.rows()), static_cast<uint64_t>(m.cols())};
  b.data.resize(sizeof(int32_t) * m.size());
  Eigen::Matrix<int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  std::memcpy(b.data.data(), rm.data(), b.data.size());
  return b;
}

Blob Blob::from_vector_i32(const std::vector<int32_t>& v) {
  Blob b;
  b.dtype = Dtype::i32;
  b.dims = {v.size()};
  b.data.resize(sizeof(int32_t) * v.size());
  std::memcpy(b.data.data(), v.data(), b.data.size());
  return b;
}

Blob Blob::from_vector_u8(const std::vector<uint8_t>& v, std::vector<uint64_t> dims) {
  Blob b;
  b.dtype = Dtype::u8;
  b.dims = std::move(dims);
  if (b.element_count() != v.size()) throw DataError("u8 blob dims do not match payload size");
  b.data.assign(v.begin(), v.end());
  return b;
}

Eigen::MatrixXd Blob::to_matrix() const {
  if (dtype != Dtype::f64 || dims.size() != 2) throw DataError("blob is not a rank-2 f64 array");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(dims[0], dims[1]);
  std::memcpy(rm.data(), data.data(), data.size());
  return rm;
}

Eigen::MatrixXi Blob::to_matrix_i32() const {
  if (dtype != Dtype::i32 || dims.size() != 2) throw DataError("blob is not a rank-2 i32 array");
  Eigen::Matrix<int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(dims[0], dims[1]);
  std::memcpy(rm.data(), data.data(), data.size());
  return rm;
}

std::vector<int32_t> Blob::to_vector_i32() const {
  if (dtype != Dtype::i32 || dims.size() != 1) throw DataError("blob is not a rank-1 i32 array");
  std::vector<int32_t> v(dims[0]);
  std::memcpy(v.data(), data.data(), data.size());
  return v;
}

void write_blob(const std::filesystem::path& path, const Blob& blob) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open blob for writing: " + path.string());
  out.write(kMagic, 4);
  uint32_t dt = static_cast<uint32_t>(blob.dtype);
  uint32_t rank = static_cast<uint32_t>(blob.dims.size());
  uint32_t reserved = 0;
  out.write(reinterpret_cast<const char*>(&dt), 4);
  out.write(reinterpret_cast<const char*>(&rank), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);
  for (uint64_t d : blob.dims) out.write(reinterpret_cast<const char*>(&d), 8);
  out.write(reinterpret_cast<const char*>(blob.data.data()),
            static_cast<std::streamsize>(blob.data.size()));
  if (!out) throw IoError("short write on blob: " + path.string());
}

Blob read_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open blob: " + path.string());
  char magic[4];
  uint32_t dt = 0, rank = 0, reserved = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&dt), 4);
  in.read(reinterpret_cast<char*>(&rank), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("corrupt blob (bad magic): " + path.string());
  if (rank > 8) throw DataError("corrupt blob (implausible rank): " + path.string());
  Blob b;
  b.dtype = static_cast<Dtype>(dt);
  (void)dtype_size(b.dtype);  // validates the code
  b.dims.resize(rank);
  for (uint32_t i = 0; i < rank; ++i) in.read(reinterpret_cast<char*>(&b.dims[i]), 8);
  if (!in) throw DataError("corrupt blob (truncated header): " + path.string());
  size_t payload = dtype_size(b.dtype) * static_cast<size_t>(b.element_count());
  b.data.resize(payload);
  in.read(reinterpret_cast<char*>(b.data.data()), static_cast<std::streamsize>(payload));
  if (static_cast<size_t>(in.gcount()) != payload)
    throw DataError("corrupt blob (truncated payload): " + path.string());
  return b;
}

}  // namespace icorr
