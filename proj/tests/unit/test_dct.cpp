#include <cmath>

#include "doctest.h"
#include "lirdrec/dct.hpp"

using namespace lirdrec;

TEST_CASE("constant matrix transforms to a single DC coefficient") {
  const double c = 1.7;
  const Tensor<double> x = Tensor<double>::full(4, 4, c);
  const Tensor<double> y = dct2(x);
  CHECK(y(0, 0) == doctest::Approx(4.0 * c).epsilon(1e-12));
  for (size_t r = 0; r < 4; ++r)
    for (size_t col = 0; col < 4; ++col)
      if (r != 0 || col != 0) CHECK(std::abs(y(r, col)) < 1e-12);
}

TEST_CASE("1-D row [1,0] gives [0.707107, 0.707107]") {
  Tensor<double> x(1, 2);
  x(0, 0) = 1.0;
  const Tensor<double> y = dct2(x);
  CHECK(y(0, 0) == doctest::Approx(0.707107).epsilon(1e-6));
  CHECK(y(0, 1) == doctest::Approx(0.707107).epsilon(1e-6));
}

TEST_CASE("fast 1-D transform matches the direct reference at many lengths") {
  for (const size_t n : {1ul, 2ul, 3ul, 5ul, 8ul, 12ul, 16ul, 37ul, 100ul, 257ul, 1000ul}) {
    Rng rng(n);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    const auto expect = detail::dct1d_direct(x);
    std::vector<double> got(n);
    Dct1d plan(n);
    plan.forward(x.data(), got.data());
    double max_err = 0.0;
    for (size_t i = 0; i < n; ++i) max_err = std::max(max_err, std::abs(expect[i] - got[i]));
    CHECK_MESSAGE(max_err < 1e-9, "length ", n);
  }
}

TEST_CASE("idct2(dct2(X)) recovers X on random 16x8") {
  Rng rng(21);
  const Tensor<double> x = Tensor<double>::randn(16, 8, rng);
  const Tensor<double> back = idct2(dct2(x));
  CHECK(max_abs_diff(x, back) < 1e-9);
}

TEST_CASE("Parseval: the transform preserves the Frobenius norm") {
  for (uint64_t seed = 1; seed <= 4; ++seed) {
    Rng rng(seed);
    const Tensor<double> x = Tensor<double>::randn(23, 15, rng);
    const Tensor<double> y = dct2(x);
    const double nx = x.frobenius_norm();
    const double ny = y.frobenius_norm();
    CHECK(std::abs(nx - ny) / nx < 1e-9);
  }
}

TEST_CASE("standard basis matrices reconstruct through the inverse") {
  for (const auto [p, q] : {std::pair<size_t, size_t>{0, 0}, {2, 1}, {4, 3}}) {
    Tensor<double> e(5, 4);
    e(p, q) = 1.0;
    const Tensor<double> back = idct2(dct2(e));
    CHECK(max_abs_diff(e, back) < 1e-12);
  }
}

TEST_CASE("non-finite input is rejected") {
  Tensor<double> x(2, 2);
  x(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(dct2(x), NumericError);
}

TEST_CASE("plans are reusable and linear") {
  DctPlan plan(6, 3);
  Rng rng(2);
  const Tensor<double> a = Tensor<double>::randn(6, 3, rng);
  const Tensor<double> b = Tensor<double>::randn(6, 3, rng);
  Tensor<double> sum(6, 3);
  for (size_t i = 0; i < sum.size(); ++i) sum.at(i) = 2.0 * a.at(i) - 0.5 * b.at(i);
  const Tensor<double> ta = plan.forward(a);
  const Tensor<double> tb = plan.forward(b);
  const Tensor<double> tsum = plan.forward(sum);
  Tensor<double> expect(6, 3);
  for (size_t i = 0; i < expect.size(); ++i) expect.at(i) = 2.0 * ta.at(i) - 0.5 * tb.at(i);
  CHECK(max_abs_diff(tsum, expect) < 1e-10);
}
