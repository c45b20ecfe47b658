#include <cmath>

#include "doctest.h"
#include "lirdrec/baselines.hpp"
#include "lirdrec/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace lirdrec;
using lirdrec::testing::finite_difference_check;

namespace {

Tensor<double> random_features(size_t rows, size_t cols, uint64_t seed) {
  Rng rng(seed);
  return Tensor<double>::randn(rows, cols, rng);
}

}  // namespace

TEST_CASE("vbpr: zero projection reduces the score to the ID part") {
  VbprModel<double> m(3, 4, random_features(4, 5, 1), 2, 2);
  m.mm_projection().value.fill(0.0);
  double idp = 0.0, mmp = 0.0;
  m.score_breakdown(1, 2, &idp, &mmp);
  CHECK(mmp == 0.0);
  double id2, mm2;
  m.score_breakdown(1, 2, &id2, &mm2);
  CHECK(idp + mmp == id2 + mm2);
}

TEST_CASE("vbpr: one-dimensional hand case scores 10 = 6 + 4") {
  Tensor<double> feats(1, 1);
  feats(0, 0) = 4.0;
  VbprModel<double> m(1, 1, std::move(feats), 1, 3);
  m.id_user().value(0, 0) = 2.0;
  m.id_item().value(0, 0) = 3.0;
  m.pref_user().value(0, 0) = 1.0;
  m.mm_projection().value(0, 0) = 1.0;  // mm_i = 4
  double idp = 0.0, mmp = 0.0;
  m.score_breakdown(0, 0, &idp, &mmp);
  CHECK(idp == doctest::Approx(6.0));
  CHECK(mmp == doctest::Approx(4.0));
  CHECK(idp + mmp == doctest::Approx(10.0));
}

TEST_CASE("vbpr: breakdown sums to the full evaluator score") {
  VbprModel<double> m(5, 6, random_features(6, 4, 7), 3, 11);
  Tensor<double> users, items;
  m.eval_representations(users, items);
  for (int32_t u = 0; u < 5; ++u)
    for (int32_t i = 0; i < 6; ++i) {
      double full = 0.0;
      for (size_t c = 0; c < users.cols(); ++c) full += users(u, c) * items(i, c);
      double idp = 0.0, mmp = 0.0;
      m.score_breakdown(u, i, &idp, &mmp);
      CHECK(std::abs(full - (idp + mmp)) < 1e-12);
    }
}

TEST_CASE("vbpr: BPR gradient wrt the positive item ID is (sigma(z)-1) * x_u") {
  VbprModel<double> m(2, 3, random_features(3, 4, 13), 3, 17);
  const std::vector<int32_t> users{1};
  const std::vector<int32_t> pos{2};
  const std::vector<int32_t> neg{0};
  Tape<double> tape;
  const ValueId loss = compute_loss(tape, m, {users, pos, neg}, 0.0, false, true);
  for (auto* p : m.parameters()) p->zero_grad();
  tape.backward(loss);

  double id_i, mm_i, id_j, mm_j;
  m.score_breakdown(1, 2, &id_i, &mm_i);
  m.score_breakdown(1, 0, &id_j, &mm_j);
  const double z = (id_i + mm_i) - (id_j + mm_j);
  const double g = 1.0 / (1.0 + std::exp(-z)) - 1.0;  // sigma(z) - 1
  for (size_t c = 0; c < 3; ++c)
    CHECK(std::abs(m.id_item().grad(2, c) - g * m.id_user().value(1, c)) < 1e-10);
}

TEST_CASE("mf: zero embeddings score zero") {
  MfModel<double> m(2, 2, 4, 3);
  m.user_table().value.fill(0.0);
  Tensor<double> users, items;
  m.eval_representations(users, items);
  for (int32_t u = 0; u < 2; ++u)
    for (int32_t i = 0; i < 2; ++i) {
      double s = 0.0;
      for (size_t c = 0; c < 4; ++c) s += users(u, c) * items(i, c);
      CHECK(s == 0.0);
    }
}

TEST_CASE("lightgcn: single-edge hand case") {
  const Dataset ds = testing::make_dataset(1, 1, {{0, 0, Split::train}});
  const auto adj = build_norm_adjacency<double>(ds);
  LightGcnModel<double> m(1, 1, 3, 1, 5);
  m.attach_graphs(&adj);
  Tensor<double> users, items;
  m.eval_representations(users, items);
  // sum readout: user = e_u + e_i, item = e_i + e_u
  const auto params = m.parameters();
  for (size_t c = 0; c < 3; ++c) {
    const double eu = params[0]->value(0, c);
    const double ei = params[1]->value(0, c);
    CHECK(users(0, c) == doctest::Approx(eu + ei).epsilon(1e-12));
    CHECK(items(0, c) == doctest::Approx(ei + eu).epsilon(1e-12));
  }
}

TEST_CASE("baseline gradients match finite differences") {
  const Dataset ds = testing::make_random_dataset(5, 6, 3, 0, 0, 19);
  const auto adj = build_norm_adjacency<double>(ds);
  const std::vector<int32_t> users{0, 2, 4};
  const std::vector<int32_t> pos{1, 3, 0};
  const std::vector<int32_t> neg{5, 0, 2};
  const BprBatch batch{users, pos, neg};

  SUBCASE("mf") {
    MfModel<double> m(5, 6, 3, 23);
    auto params = m.parameters();
    const auto res = finite_difference_check<double>(params, [&](Tape<double>& t) {
      return compute_loss(t, m, batch, 1e-3, false, true);
    });
    CHECK(res.max_rel_err < 1e-6);
  }
  SUBCASE("lightgcn") {
    LightGcnModel<double> m(5, 6, 3, 2, 29);
    m.attach_graphs(&adj);
    auto params = m.parameters();
    const auto res = finite_difference_check<double>(params, [&](Tape<double>& t) {
      return compute_loss(t, m, batch, 1e-3, false, true);
    });
    CHECK(res.max_rel_err < 1e-6);
  }
  SUBCASE("vbpr") {
    VbprModel<double> m(5, 6, random_features(6, 4, 31), 3, 37);
    auto params = m.parameters();
    const auto res = finite_difference_check<double>(params, [&](Tape<double>& t) {
      return compute_loss(t, m, batch, 1e-3, false, true);
    });
    CHECK(res.max_rel_err < 1e-6);
  }
}

TEST_CASE("all models run one epoch through the identical harness") {
  // same sampler, loss, optimizer and evaluator; no model-specific branches
  const Dataset ds = testing::make_random_dataset(8, 10, 4, 1, 1, 41);
  const auto adj = build_norm_adjacency<double>(ds);
  auto toy_features = random_features(10, 6, 43);

  auto run_one = [&](RankingModel<double>& m) {
    TrainConfig cfg;
    cfg.max_epochs = 1;
    cfg.batch_size = 8;
    cfg.lambda = 1e-4;
    cfg.seed = 7;
    const FitResult r = fit(m, ds, cfg);
    REQUIRE(r.log.size() == 1);
    CHECK(std::isfinite(r.log[0].train_loss));
    return r.log[0].train_loss;
  };

  MfModel<double> mf(8, 10, 4, 1);
  run_one(mf);
  LightGcnModel<double> lgn(8, 10, 4, 2, 2);
  lgn.attach_graphs(&adj);
  run_one(lgn);
  VbprModel<double> vbpr(8, 10, toy_features, 4, 3);
  run_one(vbpr);
  auto toy = testing::make_toy_lirdrec<double>(45);
  // toy has its own tiny dataset; run the same harness on it
  TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.batch_size = 4;
  cfg.seed = 7;
  const FitResult r = fit(*toy.model, toy.ds, cfg);
  CHECK(r.log.size() == 1);
}
