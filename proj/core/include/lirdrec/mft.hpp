#pragma once

#include <span>
#include <string>
#include <vector>

#include "lirdrec/rng.hpp"
#include "lirdrec/tape.hpp"

namespace lirdrec {

// Two-layer projection head phi(X W1 + b1) W2 mapping features into the
// d-dimensional latent space. Used both per modality and for the shared
// cross-modal path (which consumes the concatenated DCT features). The
// second layer carries no bias.
template <typename T>
struct FeatureProjector {
  Parameter<T> w1, b1, w2;

  FeatureProjector(const std::string& prefix, size_t in_dim, size_t hidden, size_t out_dim,
                   Rng& rng)
      : w1(prefix + ".w1", Tensor<T>::xavier(in_dim, hidden, rng)),
        b1(prefix + ".b1", Tensor<T>(1, hidden)),
        w2(prefix + ".w2", Tensor<T>::xavier(hidden, out_dim, rng)) {}

  ValueId forward(Tape<T>& tape, ValueId x, T slope) {
    return tape.matmul(tape.leaky_relu(tape.add_bias(tape.matmul(x, tape.leaf(w1)), tape.leaf(b1)), slope),
                       tape.leaf(w2));
  }

  std::vector<Parameter<T>*> parameters() { return {&w1, &b1, &w2}; }

  size_t in_dim() const { return w1.value.rows(); }
  size_t out_dim() const { return w2.value.cols(); }
};

// Column concatenation of the |M|+1 latent blocks into the unified item
// representation of width (|M|+1) * d.
template <typename T>
ValueId assemble_item_latent(Tape<T>& tape, std::span<const ValueId> blocks) {
  return tape.concat_cols(blocks);
}

}  // namespace lirdrec
