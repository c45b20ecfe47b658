#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "lirdrec/tensor.hpp"

namespace lirdrec {

namespace detail {

// Complex FFT of arbitrary length: radix-2 for powers of two, Bluestein
// otherwise. Twiddles and chirp are precomputed per length.
class FftPlan {
 public:
  explicit FftPlan(size_t n);
  size_t length() const { return n_; }
  void forward(std::complex<double>* a) const;

 private:
  void pow2_fft(std::complex<double>* a, size_t n, bool inverse) const;

  size_t n_;
  bool is_pow2_;
  size_t m_ = 0;                                // Bluestein convolution length
  std::vector<std::complex<double>> chirp_;     // exp(-i pi k^2 / n)
  std::vector<std::complex<double>> chirp_fft_; // FFT of the padded conjugate chirp
};

// O(n^2) reference transforms used as test oracles and for the inverse.
std::vector<double> dct1d_direct(const std::vector<double>& x);
std::vector<double> idct1d_direct(const std::vector<double>& x);

}  // namespace detail

// Orthonormal type-II DCT along one axis, O(n log n) via the even-odd
// folding of the length-n FFT.
class Dct1d {
 public:
  explicit Dct1d(size_t n);
  size_t length() const { return n_; }
  void forward(const double* in, double* out) const;

 private:
  size_t n_;
  detail::FftPlan fft_;
  std::vector<std::complex<double>> post_;  // alpha_k * exp(-i pi k / (2n))
};

// Separable 2-D plan over fixed (rows, cols). forward() is the fast path;
// inverse() is the O(n^2) reference used for verification.
class DctPlan {
 public:
  DctPlan(size_t rows, size_t cols);
  Tensor<double> forward(const Tensor<double>& x) const;
  Tensor<double> inverse(const Tensor<double>& x) const;

 private:
  size_t rows_, cols_;
  Dct1d row_axis_;  // length rows, applied down each column
  Dct1d col_axis_;  // length cols, applied across each row
};

Tensor<double> dct2(const Tensor<double>& x);
Tensor<double> idct2(const Tensor<double>& x);

}  // namespace lirdrec
