#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <vector>

#include "lirdrec/errors.hpp"
#include "lirdrec/parallel.hpp"
#include "lirdrec/tensor.hpp"

namespace lirdrec {

// Compressed sparse row matrix. Column indices are sorted within each row.
template <typename T>
struct Csr {
  size_t rows = 0, cols = 0;
  std::vector<uint32_t> indptr;   // size rows + 1
  std::vector<uint32_t> indices;  // size nnz
  std::vector<T> data;            // size nnz

  Csr() = default;
  Csr(size_t r, size_t c) : rows(r), cols(c), indptr(r + 1, 0) {}

  size_t nnz() const { return indices.size(); }

  static Csr from_coo(size_t rows, size_t cols,
                      std::vector<std::tuple<uint32_t, uint32_t, T>> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) {
                return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) < std::get<0>(b)
                                                        : std::get<1>(a) < std::get<1>(b);
              });
    Csr m(rows, cols);
    m.indices.reserve(entries.size());
    m.data.reserve(entries.size());
    for (size_t i = 0; i < entries.size(); ++i) {
      const auto& [r, c, v] = entries[i];
      if (r >= rows || c >= cols) throw ContractError("Csr::from_coo: index out of range");
      if (i > 0 && std::get<0>(entries[i - 1]) == r && std::get<1>(entries[i - 1]) == c)
        throw ContractError("Csr::from_coo: duplicate entry");
      m.indptr[r + 1]++;
      m.indices.push_back(c);
      m.data.push_back(v);
    }
    for (size_t r = 0; r < rows; ++r) m.indptr[r + 1] += m.indptr[r];
    return m;
  }

  // y = A * x, parallel over output rows.
  void multiply(const Tensor<T>& x, Tensor<T>& y) const {
    if (x.rows() != cols) throw ContractError("Csr::multiply: shape mismatch");
    if (y.rows() != rows || y.cols() != x.cols()) y = Tensor<T>(rows, x.cols());
    const size_t d = x.cols();
    parallel_for(rows, [&](size_t r0, size_t r1) {
      for (size_t r = r0; r < r1; ++r) {
        T* out = y.data() + r * d;
        std::fill(out, out + d, T(0));
        for (uint32_t p = indptr[r]; p < indptr[r + 1]; ++p) {
          const T w = data[p];
          const T* in = x.data() + static_cast<size_t>(indices[p]) * d;
          for (size_t c = 0; c < d; ++c) out[c] += w * in[c];
        }
      }
    });
  }

  Tensor<T> to_dense() const {
    Tensor<T> d(rows, cols);
    for (size_t r = 0; r < rows; ++r)
      for (uint32_t p = indptr[r]; p < indptr[r + 1]; ++p) d(r, indices[p]) = data[p];
    return d;
  }

  Csr transposed() const {
    Csr t(cols, rows);
    t.indices.resize(nnz());
    t.data.resize(nnz());
    std::vector<uint32_t> cnt(cols, 0);
    for (const uint32_t c : indices) cnt[c]++;
    for (size_t c = 0; c < cols; ++c) t.indptr[c + 1] = t.indptr[c] + cnt[c];
    std::vector<uint32_t> next(t.indptr.begin(), t.indptr.end() - 1);
    for (size_t r = 0; r < rows; ++r)
      for (uint32_t p = indptr[r]; p < indptr[r + 1]; ++p) {
        const uint32_t pos = next[indices[p]]++;
        t.indices[pos] = static_cast<uint32_t>(r);
        t.data[pos] = data[p];
      }
    return t;
  }

  bool operator==(const Csr& o) const {
    return rows == o.rows && cols == o.cols && indptr == o.indptr && indices == o.indices &&
           data == o.data;
  }
};

template <typename To, typename From>
Csr<To> csr_cast(const Csr<From>& a) {
  Csr<To> b;
  b.rows = a.rows;
  b.cols = a.cols;
  b.indptr = a.indptr;
  b.indices = a.indices;
  b.data.resize(a.data.size());
  for (size_t i = 0; i < a.data.size(); ++i) b.data[i] = static_cast<To>(a.data[i]);
  return b;
}

}  // namespace lirdrec
