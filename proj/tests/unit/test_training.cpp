#include <cmath>
#include <set>

#include "doctest.h"
#include "lirdrec/baselines.hpp"
#include "lirdrec/trainer.hpp"
#include "support/fixtures.hpp"

using namespace lirdrec;

TEST_CASE("sampler: with two items the only negative is forced") {
  const Dataset ds = testing::make_dataset(1, 2, {{0, 0, Split::train}});
  BprSampler sampler(ds, 1);
  sampler.start_epoch();
  BprBatch b;
  for (int round = 0; round < 50; ++round) {
    sampler.start_epoch();
    while (sampler.next_batch(8, b))
      for (const int32_t j : b.neg) CHECK(j == 1);
  }
}

TEST_CASE("sampler: negatives never come from the user's train items") {
  const Dataset ds = testing::make_random_dataset(10, 20, 5, 0, 0, 3);
  const auto train = ds.items_by_user(Split::train);
  BprSampler sampler(ds, 5);
  size_t draws = 0;
  BprBatch b;
  while (draws < 100000) {
    sampler.start_epoch();
    while (sampler.next_batch(64, b)) {
      for (size_t k = 0; k < b.size(); ++k) {
        CHECK(!std::binary_search(train[b.users[k]].begin(), train[b.users[k]].end(), b.neg[k]));
      }
      draws += b.size();
    }
  }
}

TEST_CASE("sampler: negative draws are uniform over non-interacted items") {
  // one user, 3 train items, 17 candidate negatives; chi-squared over ~1e5 draws
  const Dataset ds = testing::make_random_dataset(1, 20, 3, 0, 0, 7);
  const auto train = ds.items_by_user(Split::train)[0];
  BprSampler sampler(ds, 11);
  std::vector<size_t> counts(20, 0);
  size_t total = 0;
  BprBatch b;
  while (total < 102000) {
    sampler.start_epoch();
    while (sampler.next_batch(64, b))
      for (const int32_t j : b.neg) {
        counts[j]++;
        ++total;
      }
  }
  const double expected = static_cast<double>(total) / 17.0;
  double chi2 = 0.0;
  for (int32_t i = 0; i < 20; ++i) {
    if (std::binary_search(train.begin(), train.end(), i)) {
      CHECK(counts[i] == 0);
      continue;
    }
    const double d = static_cast<double>(counts[i]) - expected;
    chi2 += d * d / expected;
  }
  // 16 degrees of freedom; 99.9th percentile is ~39
  CHECK(chi2 < 39.0);
}

TEST_CASE("sampler: a user interacting with every item is rejected") {
  const Dataset ds = testing::make_dataset(
      1, 2, {{0, 0, Split::train}, {0, 1, Split::train}});
  CHECK_THROWS_AS(BprSampler(ds, 1), ContractError);
}

TEST_CASE("sampler: epoch pass covers every train edge exactly once") {
  const Dataset ds = testing::make_random_dataset(6, 15, 4, 1, 0, 13);
  BprSampler sampler(ds, 17);
  sampler.start_epoch();
  std::multiset<std::pair<int32_t, int32_t>> seen;
  BprBatch b;
  while (sampler.next_batch(5, b))
    for (size_t k = 0; k < b.size(); ++k) seen.emplace(b.users[k], b.pos[k]);
  std::multiset<std::pair<int32_t, int32_t>> expect;
  for (const auto& r : ds.records)
    if (r.split == Split::train) expect.emplace(r.user, r.item);
  CHECK(seen == expect);
}

TEST_CASE("loss: equal scores with no penalty give ln 2 per triple") {
  MfModel<double> m(2, 3, 2, 1);
  m.user_table().value.fill(0.0);  // all scores zero
  const BprBatch batch{{0, 1}, {0, 1}, {2, 2}};
  Tape<double> tape;
  const ValueId loss = compute_loss(tape, m, batch, 0.0, false, true);
  CHECK(tape.value(loss)(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("loss: score gap of 2 gives -ln sigmoid(2)") {
  MfModel<double> m(1, 2, 1, 2);
  m.user_table().value(0, 0) = 1.0;
  m.item_table().value(0, 0) = 2.0;  // positive score 2
  m.item_table().value(1, 0) = 0.0;  // negative score 0
  const BprBatch batch{{0}, {0}, {1}};
  Tape<double> tape;
  const ValueId loss = compute_loss(tape, m, batch, 0.0, false, true);
  CHECK(tape.value(loss)(0, 0) == doctest::Approx(0.126928).epsilon(1e-5));
}

TEST_CASE("loss: the penalty adds exactly lambda times the representation norms") {
  auto toy = testing::make_toy_lirdrec<double>(3);
  auto& model = *toy.model;
  const BprBatch batch{{0, 1, 2}, {0, 1, 2}, {3, 4, 0}};
  const PwcState<double> frozen = model.pwc_state();

  model.pwc_state() = frozen;
  Tape<double> t0;
  const double base = t0.value(compute_loss(t0, model, batch, 0.0, false, true))(0, 0);

  model.pwc_state() = frozen;
  Tape<double> t1;
  const ValueId with = compute_loss(t1, model, batch, 0.25, false, true);
  // reconstruct the expected penalty from the recorded representations
  model.pwc_state() = frozen;
  Tape<double> t2;
  const BatchRefs refs = model.forward_batch(t2, batch.users, batch.pos, batch.neg, true);
  double sumsq = 0.0;
  for (size_t r = 0; r < batch.size(); ++r)
    for (size_t c = 0; c < t2.value(refs.h_user).cols(); ++c) {
      sumsq += t2.value(refs.h_user)(r, c) * t2.value(refs.h_user)(r, c);
      sumsq += t2.value(refs.h_pos)(r, c) * t2.value(refs.h_pos)(r, c);
    }
  const double penalty = 0.25 * sumsq / static_cast<double>(batch.size());
  CHECK(t1.value(with)(0, 0) == doctest::Approx(base + penalty).epsilon(1e-9));
  model.pwc_state() = frozen;
}

TEST_CASE("loss at initialization sits near ln 2 on balanced random data") {
  const Dataset ds = testing::make_random_dataset(30, 40, 5, 1, 1, 23);
  MfModel<double> m(30, 40, 16, 29);
  BprSampler sampler(ds, 31);
  sampler.start_epoch();
  BprBatch batch;
  double total = 0.0;
  size_t n = 0;
  while (sampler.next_batch(64, batch)) {
    Tape<double> tape;
    total += tape.value(compute_loss(tape, m, batch, 0.0, false, true))(0, 0) * batch.size();
    n += batch.size();
  }
  CHECK(std::abs(total / static_cast<double>(n) - std::log(2.0)) < 0.05);
}

TEST_CASE("one optimizer step with lr = 0 changes nothing") {
  MfModel<double> m(3, 4, 2, 5);
  const Tensor<double> before = m.user_table().value;
  const BprBatch batch{{0, 1}, {1, 2}, {3, 0}};
  Tape<double> tape;
  const ValueId loss = compute_loss(tape, m, batch, 1e-3, false, true);
  for (auto* p : m.parameters()) p->zero_grad();
  tape.backward(loss);
  AdamOptimizer<double> adam(AdamConfig{.lr = 0.0});
  auto params = m.parameters();
  adam.step(params);
  CHECK(max_abs_diff(before, m.user_table().value) == 0.0);
}

TEST_CASE("fit: patience 1 without improvement stops after 2 evals") {
  // lr 0 freezes the model, so validation recall never improves after the
  // first evaluation and patience 1 fires at the second
  const Dataset ds = testing::make_random_dataset(10, 12, 4, 1, 1, 37);
  MfModel<double> m(10, 12, 4, 41);
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.patience = 1;
  cfg.batch_size = 16;
  cfg.seed = 43;
  cfg.lr = 0.0;  // frozen model: recall never improves after the first eval
  const FitResult r = fit(m, ds, cfg);
  CHECK(r.log.size() == 2);
  CHECK(r.best_epoch == 1);
}

TEST_CASE("fit: same seed twice gives identical logs") {
  const Dataset ds = testing::make_random_dataset(12, 15, 4, 1, 1, 47);
  auto run = [&ds] {
    MfModel<double> m(12, 15, 8, 53);
    TrainConfig cfg;
    cfg.max_epochs = 5;
    cfg.patience = 10;
    cfg.batch_size = 16;
    cfg.seed = 59;
    cfg.lr = 0.01;
    return fit(m, ds, cfg);
  };
  const FitResult a = run();
  const FitResult b = run();
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].train_loss == b.log[i].train_loss);
    CHECK(a.log[i].val_recall == b.log[i].val_recall);
  }
}

TEST_CASE("fit: toy training pushes the loss below the ln 2 baseline") {
  auto toy = testing::make_toy_lirdrec<double>(61);
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.patience = 1000;
  cfg.batch_size = 8;
  cfg.lr = 0.01;
  cfg.lambda = 0.0;
  cfg.seed = 67;
  const FitResult r = fit(*toy.model, toy.ds, cfg);
  CHECK(r.log.back().train_loss < std::log(2.0));
}

TEST_CASE("fit: divergence aborts with the last good checkpoint") {
  const Dataset ds = testing::make_random_dataset(8, 10, 4, 1, 1, 71);
  MfModel<double> m(8, 10, 4, 73);
  // blow up the loss by direct parameter injection after the first epoch
  TrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.patience = 20;
  cfg.batch_size = 16;
  cfg.seed = 79;
  cfg.lr = 1e160;  // scores overflow after one step, z becomes inf - inf
  const FitResult r = fit(m, ds, cfg);
  CHECK(r.diverged);
  CHECK(m.user_table().value.all_finite());  // restored snapshot
}

TEST_CASE("regularization sweep: final parameter norm is non-increasing in lambda") {
  const Dataset ds = testing::make_random_dataset(15, 20, 5, 1, 1, 83);
  std::vector<double> norms;
  for (const double lambda : {1e-5, 1e-3, 1e-1}) {
    MfModel<double> m(15, 20, 8, 89);
    TrainConfig cfg;
    cfg.max_epochs = 40;
    cfg.patience = 1000;
    cfg.batch_size = 32;
    cfg.lr = 0.01;
    cfg.lambda = lambda;
    cfg.seed = 97;
    fit(m, ds, cfg);
    double sq = 0.0;
    for (const auto* p : m.parameters()) {
      const double f = p->value.frobenius_norm();
      sq += f * f;
    }
    norms.push_back(std::sqrt(sq));
  }
  CHECK(norms[1] <= norms[0] * 1.01);
  CHECK(norms[2] <= norms[1] * 1.01);
}
