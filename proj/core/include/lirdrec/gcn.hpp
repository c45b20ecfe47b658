#pragma once

#include <utility>

#include "lirdrec/graphs.hpp"
#include "lirdrec/tape.hpp"

namespace lirdrec {

// LightGCN-style propagation over the bipartite graph: layers alternate
// sides with 1/sqrt(|N_u||N_i|) weights, readout is the sum over layers
// 0..L of each side's representations. L = 0 returns the inputs unchanged.
template <typename T>
std::pair<ValueId, ValueId> forward_ui_gcn(Tape<T>& tape, ValueId users0, ValueId items0,
                                           const BipartiteAdjacency<T>& adj, int layers) {
  if (tape.value(users0).rows() != adj.user_to_item.rows ||
      tape.value(items0).rows() != adj.user_to_item.cols)
    throw ContractError("forward_ui_gcn: embedding row counts do not match the graph");
  if (tape.value(users0).cols() != tape.value(items0).cols())
    throw ContractError("forward_ui_gcn: user/item widths differ");
  ValueId acc_u = users0, acc_i = items0;
  ValueId cur_u = users0, cur_i = items0;
  for (int l = 0; l < layers; ++l) {
    const ValueId next_u = tape.spmm(&adj.user_to_item, &adj.item_to_user, cur_i);
    const ValueId next_i = tape.spmm(&adj.item_to_user, &adj.user_to_item, cur_u);
    acc_u = tape.add(acc_u, next_u);
    acc_i = tape.add(acc_i, next_i);
    cur_u = next_u;
    cur_i = next_i;
  }
  return {acc_u, acc_i};
}

// Item-item propagation with a residual connection: S^L x + x. The operator
// is symmetric, so it serves as its own backward transpose.
template <typename T>
ValueId forward_ii_gcn(Tape<T>& tape, ValueId items, const Csr<T>& s, int layers) {
  if (s.rows != s.cols || tape.value(items).rows() != s.rows)
    throw ContractError("forward_ii_gcn: operator/item shape mismatch");
  ValueId h = items;
  for (int l = 0; l < layers; ++l) h = tape.spmm(&s, &s, h);
  return tape.add(h, items);
}

}  // namespace lirdrec
