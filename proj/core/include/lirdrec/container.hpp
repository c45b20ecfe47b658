#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lirdrec/sparse.hpp"
#include "lirdrec/tensor.hpp"

namespace lirdrec {

uint32_t crc32(const void* data, size_t n);
uint64_t fnv1a64(std::string_view s);
uint64_t fnv1a64_bytes(const void* data, size_t n);
uint64_t hash_file(const std::string& path);  // FNV-1a over the raw bytes

// One modality's dense item-feature matrix plus provenance.
struct FeatureMatrix {
  std::string modality_id;
  Tensor<float> values;  // |I| x d_m, row-major

  size_t rows() const { return values.rows(); }
  size_t cols() const { return values.cols(); }
};

// `FMX1` container: magic, u32 rows, u32 cols, u64 tag hash, f32 payload,
// trailing u32 CRC32 of the payload. All fields little-endian.
void store_features(const FeatureMatrix& m, const std::string& path);

// expected_modality, when non-empty, is verified against the stored tag hash
// and becomes the loaded modality_id; otherwise the hex hash is used.
FeatureMatrix load_features(const std::string& path, const std::string& expected_modality = "");

// `GRX1` container: same layout with a CSR payload
// (u32 nnz, u32 indptr[rows+1], u32 indices[nnz], f32 data[nnz], u32 crc).
void store_graph(const Csr<float>& g, uint64_t tag, const std::string& path);
Csr<float> load_graph(const std::string& path, uint64_t* tag_out = nullptr);

// `CKP1` checkpoint: u32 section count, then per section a length-prefixed
// name and an f32 tensor with its own CRC.
struct NamedTensor {
  std::string name;
  Tensor<float> data;
};
void store_sections(const std::vector<NamedTensor>& sections, const std::string& path);
std::vector<NamedTensor> load_sections(const std::string& path);

}  // namespace lirdrec
