#include "lirdrec/dct.hpp"

#include <cmath>

#include "lirdrec/errors.hpp"
#include "lirdrec/parallel.hpp"

namespace lirdrec {

namespace detail {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t next_pow2(size_t n) {
  size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}
}  // namespace

FftPlan::FftPlan(size_t n) : n_(n), is_pow2_(is_power_of_two(n)) {
  if (n_ == 0) throw ContractError("FftPlan: zero length");
  if (is_pow2_) return;
  // Bluestein: convolve against the chirp on a power-of-two ring.
  m_ = next_pow2(2 * n_ - 1);
  chirp_.resize(n_);
  for (size_t k = 0; k < n_; ++k) {
    // k^2 mod 2n keeps the angle small for precision at large k
    const uint64_t q = (static_cast<uint64_t>(k) * k) % (2 * n_);
    const double ang = -kPi * static_cast<double>(q) / static_cast<double>(n_);
    chirp_[k] = {std::cos(ang), std::sin(ang)};
  }
  std::vector<std::complex<double>> b(m_, {0.0, 0.0});
  b[0] = std::conj(chirp_[0]);
  for (size_t k = 1; k < n_; ++k) {
    b[k] = std::conj(chirp_[k]);
    b[m_ - k] = std::conj(chirp_[k]);
  }
  pow2_fft(b.data(), m_, false);
  chirp_fft_ = std::move(b);
}

void FftPlan::pow2_fft(std::complex<double>* a, size_t n, bool inverse) const {
  // iterative radix-2 Cooley-Tukey with bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) a[i] *= inv;
  }
}

void FftPlan::forward(std::complex<double>* a) const {
  if (is_pow2_) {
    pow2_fft(a, n_, false);
    return;
  }
  std::vector<std::complex<double>> tmp(m_, {0.0, 0.0});
  for (size_t k = 0; k < n_; ++k) tmp[k] = a[k] * chirp_[k];
  pow2_fft(tmp.data(), m_, false);
  for (size_t k = 0; k < m_; ++k) tmp[k] *= chirp_fft_[k];
  pow2_fft(tmp.data(), m_, true);
  for (size_t k = 0; k < n_; ++k) a[k] = tmp[k] * chirp_[k];
}

std::vector<double> dct1d_direct(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i)
      s += x[i] * std::cos(kPi * (2.0 * i + 1.0) * k / (2.0 * n));
    const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    out[k] = alpha * s;
  }
  return out;
}

std::vector<double> idct1d_direct(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (size_t k = 0; k < n; ++k) {
      const double alpha = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      s += alpha * x[k] * std::cos(kPi * (2.0 * i + 1.0) * k / (2.0 * n));
    }
    out[i] = s;
  }
  return out;
}

}  // namespace detail

Dct1d::Dct1d(size_t n) : n_(n), fft_(n) {
  if (n_ == 0) throw ContractError("Dct1d: zero length");
  post_.resize(n_);
  const double a0 = std::sqrt(1.0 / static_cast<double>(n_));
  const double ak = std::sqrt(2.0 / static_cast<double>(n_));
  for (size_t k = 0; k < n_; ++k) {
    const double ang = -detail::kPi * static_cast<double>(k) / (2.0 * static_cast<double>(n_));
    const double alpha = k == 0 ? a0 : ak;
    post_[k] = {alpha * std::cos(ang), alpha * std::sin(ang)};
  }
}

void Dct1d::forward(const double* in, double* out) const {
  if (n_ == 1) {
    out[0] = in[0];
    return;
  }
  // even-odd fold: v = [x0, x2, ..., | ..., x3, x1]
  std::vector<std::complex<double>> v(n_);
  const size_t half = (n_ + 1) / 2;
  for (size_t i = 0; i < half; ++i) v[i] = {in[2 * i], 0.0};
  for (size_t i = 0; i < n_ / 2; ++i) v[n_ - 1 - i] = {in[2 * i + 1], 0.0};
  fft_.forward(v.data());
  for (size_t k = 0; k < n_; ++k)
    out[k] = v[k].real() * post_[k].real() - v[k].imag() * post_[k].imag();
}

DctPlan::DctPlan(size_t rows, size_t cols)
    : rows_(rows), cols_(cols), row_axis_(rows), col_axis_(cols) {}

Tensor<double> DctPlan::forward(const Tensor<double>& x) const {
  if (x.rows() != rows_ || x.cols() != cols_) throw ContractError("DctPlan: shape mismatch");
  // pass 1: along each row
  Tensor<double> a(rows_, cols_);
  parallel_for(rows_, [&](size_t r0, size_t r1) {
    for (size_t r = r0; r < r1; ++r) col_axis_.forward(x.data() + r * cols_, a.data() + r * cols_);
  });
  // pass 2: along each column, via transpose for contiguous access
  Tensor<double> at(cols_, rows_);
  for (size_t r = 0; r < rows_; ++r)
    for (size_t c = 0; c < cols_; ++c) at(c, r) = a(r, c);
  Tensor<double> bt(cols_, rows_);
  parallel_for(cols_, [&](size_t c0, size_t c1) {
    for (size_t c = c0; c < c1; ++c) row_axis_.forward(at.data() + c * rows_, bt.data() + c * rows_);
  });
  Tensor<double> out(rows_, cols_);
  for (size_t c = 0; c < cols_; ++c)
    for (size_t r = 0; r < rows_; ++r) out(r, c) = bt(c, r);
  return out;
}

Tensor<double> DctPlan::inverse(const Tensor<double>& x) const {
  if (x.rows() != rows_ || x.cols() != cols_) throw ContractError("DctPlan: shape mismatch");
  Tensor<double> a(rows_, cols_);
  for (size_t r = 0; r < rows_; ++r) {
    std::vector<double> row(x.data() + r * cols_, x.data() + (r + 1) * cols_);
    const auto inv = detail::idct1d_direct(row);
    for (size_t c = 0; c < cols_; ++c) a(r, c) = inv[c];
  }
  Tensor<double> out(rows_, cols_);
  for (size_t c = 0; c < cols_; ++c) {
    std::vector<double> col(rows_);
    for (size_t r = 0; r < rows_; ++r) col[r] = a(r, c);
    const auto inv = detail::idct1d_direct(col);
    for (size_t r = 0; r < rows_; ++r) out(r, c) = inv[r];
  }
  return out;
}

Tensor<double> dct2(const Tensor<double>& x) {
  if (!x.all_finite()) throw NumericError("dct2: non-finite input");
  return DctPlan(x.rows(), x.cols()).forward(x);
}

Tensor<double> idct2(const Tensor<double>& x) {
  return DctPlan(x.rows(), x.cols()).inverse(x);
}

}  // namespace lirdrec
