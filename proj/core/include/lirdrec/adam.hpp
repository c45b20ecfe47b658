#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "lirdrec/tape.hpp"

namespace lirdrec {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moments live inside each Parameter so checkpoints can
// persist optimizer state alongside values.
template <typename T>
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

  void set_lr(double lr) { cfg_.lr = lr; }
  uint64_t step_count() const { return t_; }
  void set_step_count(uint64_t t) { t_ = t; }

  void step(std::span<Parameter<T>* const> params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Parameter<T>* p : params) {
      if (p->adam_m.empty()) {
        p->adam_m = Tensor<T>(p->value.rows(), p->value.cols());
        p->adam_v = Tensor<T>(p->value.rows(), p->value.cols());
      }
      const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
      for (size_t i = 0; i < p->value.size(); ++i) {
        const T g = p->grad.at(i);
        T& m = p->adam_m.at(i);
        T& v = p->adam_v.at(i);
        m = b1 * m + (T(1) - b1) * g;
        v = b2 * v + (T(1) - b2) * g * g;
        const double mhat = static_cast<double>(m) / bc1;
        const double vhat = static_cast<double>(v) / bc2;
        p->value.at(i) -= static_cast<T>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
      }
    }
  }

 private:
  AdamConfig cfg_;
  uint64_t t_ = 0;
};

}  // namespace lirdrec
