#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace icorr {

// Raw little-endian array blob with a 16-byte fixed header:
//   bytes 0..3   magic "ICAR"
//   bytes 4..7   dtype code (uint32)
//   bytes 8..11  rank (uint32)
//   bytes 12..15 reserved (zero)
// followed by rank uint64 dims, then the row-major payload.
enum class Dtype : uint32_t {
  f64 = 1,
  f32 = 2,
  i32 = 3,
  i64 = 4,
  u8 = 5,
};

size_t dtype_size(Dtype t);

struct Blob {
  Dtype dtype = Dtype::f64;
  std::vector<uint64_t> dims;
  std::vector<unsigned char> data;

  uint64_t element_count() const;

  static Blob from_matrix(const Eigen::MatrixXd& m);
  static Blob from_matrix_i32(const Eigen::MatrixXi& m);
  static Blob from_vector_i32(const std::vector<int32_t>& v);
  static Blob from_vector_u8(const std::vector<uint8_t>& v, std::vector<uint64_t> dims);

  Eigen::MatrixXd to_matrix() const;
  Eigen::MatrixXi to_matrix_i32() const;
  std::vector<int32_t> to_vector_i32() const;
  const std::vector<unsigned char>& raw() const { return data; }
};

void write_blob(const std::filesystem::path& path, const Blob& blob);
Blob read_blob(const std::filesystem::path& path);

}  // namespace icorr
