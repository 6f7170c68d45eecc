// Copyright 2026 The tpcost Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cmd_oracle.hpp"
#include "costmodel_test_util.hpp"
#include "tpcost/costmodel/checkpoint.hpp"
#include "tpcost/costmodel/epsilon.hpp"
#include "tpcost/costmodel/finetune.hpp"
#include "tpcost/costmodel/loss.hpp"
#include "tpcost/costmodel/tune.hpp"
#include "tpcost/dataset/synth.hpp"

namespace tpcost::costmodel {
namespace {

using testing::pointers;
using testing::random_input;
using testing::brute_force_cmd;
using testing::tiny_config;

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Matrix random_set(Rng& rng, int max_rows, int cols) {
  Matrix m(1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(max_rows))), cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-2, 3);
  return m;
}

TEST(Loss, HandExamples) {
  std::vector<double> p1{2}, y1{1};
  EXPECT_DOUBLE_EQ(loss_pretrain(p1, y1, 1e-3), 1.001);
  std::vector<double> p2{1, 3}, y2{2, 2};
  EXPECT_DOUBLE_EQ(loss_pretrain(p2, y2, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(loss_pretrain(y2, y2, 1e-3), 0.0);
  std::vector<double> empty;
  EXPECT_THROW(loss_pretrain(empty, empty, 1e-3), EmptyBatch);
}

TEST(Cmd, HandExample) {
  EXPECT_NEAR(cmd(column({0, 1}), column({0.5, 0.5}), 5), 0.3125, 1e-15);
  std::vector<double> p{2}, y{1};
  EXPECT_NEAR(loss_finetune(p, y, column({0, 1}), column({0.5, 0.5}), 1e-3, 1.0, 5), 1.3135, 1e-12);
  EXPECT_DOUBLE_EQ(loss_finetune(p, y, column({0, 1}), column({0.5, 0.5}), 1e-3, 0.0, 5), loss_pretrain(p, y, 1e-3));
  EXPECT_DOUBLE_EQ(loss_finetune(p, y, column({0, 1}), column({0, 1}), 1e-3, 1.0, 5), loss_pretrain(p, y, 1e-3));
}

TEST(Cmd, MatchesBruteForceAndMetricProperties) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int cols = 1 + static_cast<int>(rng.below(3));
    const Matrix a = random_set(rng, 32, cols);
    const Matrix b = random_set(rng, 32, cols);
    const double v = cmd(a, b, 5);
    EXPECT_NEAR(v, brute_force_cmd(a, b, 5), 1e-9);
    EXPECT_GE(v, 0.0);
    EXPECT_EQ(cmd(a, a, 5), 0.0);
    EXPECT_EQ(v, cmd(b, a, 5));
    const Matrix shift = Matrix::Constant(1, cols, 4.0);
    const Matrix a2 = a.rowwise() + shift.row(0);
    const Matrix b2 = b.rowwise() + shift.row(0);
    EXPECT_NEAR(cmd(a2, b2, 5), v, 1e-9 * std::max(1.0, v));
  }
  EXPECT_THROW(cmd(Matrix(0, 2), Matrix::Zero(3, 2), 5), EmptySet);
  EXPECT_THROW(cmd(Matrix::Zero(2, 2), Matrix::Zero(3, 1), 5), DimensionMismatch);
}

TEST(Cmd, TranslationInvarianceIsExactOnDyadicData) {
  // Values on a power-of-two grid keep every intermediate exact.
  const Matrix a = column({0, 0.25, 1, 0.5});
  const Matrix b = column({0.75, 0.5, 0.5, 0.25});
  const Matrix a2 = (a.array() + 8).matrix(), b2 = (b.array() + 8).matrix();
  EXPECT_EQ(cmd(a, b, 5), cmd(a2, b2, 5));
}

TEST(Metrics, HandExamples) {
  std::vector<double> p{1, 4}, y{2, 2};
  auto m = metrics(p, y);
  EXPECT_DOUBLE_EQ(m.mape, 0.75);
  EXPECT_DOUBLE_EQ(m.rmse, std::sqrt(2.5));
  EXPECT_DOUBLE_EQ(m.mspe, 0.625);
  std::vector<double> p1{2}, y1{1};
  auto one = metrics(p1, y1);
  EXPECT_EQ(one.mape, 1.0);
  EXPECT_EQ(one.rmse, 1.0);
  EXPECT_EQ(one.mspe, 1.0);
  auto zero = metrics(y, y);
  EXPECT_EQ(zero.mape + zero.rmse + zero.mspe, 0.0);
}

TEST(Network, ZeroFinalLayerGivesZeroAndClosedFormBiasGradient) {
  Rng rng(3);
  auto params = init_params(tiny_config());
  params.weights.decoder.back().w.setZero();
  params.weights.decoder.back().b.setZero();
  std::vector<EncodedInput> batch = {random_input(rng, 1), random_input(rng, 2), random_input(rng, 4)};
  auto r = forward(params, batch);
  for (double p : r.predictions) EXPECT_EQ(p, 0.0);
  std::vector<double> y = {0.5, -1.0, 2.0};
  auto lg = loss_and_gradients(params, pointers(batch), y, LossSpec{LossKind::kMse, 1e-3, 0, 0, 5});
  EXPECT_NEAR(lg.grads.decoder.back().b(0, 0), 2.0 / 3.0 * (0 - 0.5 + 0 + 1.0 + 0 - 2.0), 1e-14);
}

TEST(Network, DuplicatedBatchKeepsGradients) {
  Rng rng(4);
  auto params = init_params(tiny_config(5));
  std::vector<EncodedInput> batch = {random_input(rng, 1), random_input(rng, 3), random_input(rng, 3)};
  std::vector<double> y = {0.2, 1.0, 1.7};
  const LossSpec spec{LossKind::kHybrid, 1e-3, 1.0, 0, 5};
  auto a = loss_and_gradients(params, pointers(batch), y, spec);
  auto twice = batch;
  twice.insert(twice.end(), batch.begin(), batch.end());
  auto y2 = y;
  y2.insert(y2.end(), y.begin(), y.end());
  auto b = loss_and_gradients(params, pointers(twice), y2, spec);
  EXPECT_NEAR(a.loss, b.loss, 1e-13);
  double worst = 0;
  for_each_tensor([&](const std::string&, const Matrix& g1, const Matrix& g2) { worst = std::max(worst, (g1 - g2).cwiseAbs().maxCoeff()); },
                  a.grads, b.grads);
  EXPECT_LT(worst, 1e-12);
}

TEST(Network, BatchEquivarianceAndLeafRouting) {
  Rng rng(6);
  auto params = init_params(tiny_config(6));
  std::vector<EncodedInput> batch;
  for (int i = 0; i < 7; ++i) batch.push_back(random_input(rng, 1 + static_cast<int>(rng.below(4))));
  const auto base = forward(params, batch);
  std::vector<std::size_t> perm = {3, 0, 6, 1, 5, 2, 4};
  std::vector<EncodedInput> permuted;
  for (auto i : perm) permuted.push_back(batch[i]);
  const auto r = forward(params, permuted);
  for (std::size_t k = 0; k < perm.size(); ++k) {
    EXPECT_NEAR(r.predictions[k], base.predictions[perm[k]], 1e-12);
    EXPECT_LT((r.latents.z.row(static_cast<Eigen::Index>(k)) - base.latents.z.row(static_cast<Eigen::Index>(perm[k]))).norm(), 1e-12);
  }
  // Each sample alone gives the same output as inside the batch.
  for (std::size_t i = 0; i < batch.size(); ++i) {
    EXPECT_NEAR(forward(params, std::span<const EncodedInput>(&batch[i], 1)).predictions[0], base.predictions[i], 1e-12);
  }
  // Perturbing the embedding for two leaves moves only two-leaf samples.
  auto tweaked = params;
  tweaked.weights.leaf_embed[1].b.array() += 0.5;
  const auto t = forward(tweaked, batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].n_leaf() == 2) {
      EXPECT_GT((t.latents.z_x.row(static_cast<Eigen::Index>(i)) - base.latents.z_x.row(static_cast<Eigen::Index>(i))).norm(), 0.1);
    } else {
      EXPECT_EQ(t.latents.z_x.row(static_cast<Eigen::Index>(i)), base.latents.z_x.row(static_cast<Eigen::Index>(i)));
    }
  }
  std::vector<EncodedInput> too_big = {random_input(rng, 5)};
  EXPECT_THROW(forward(params, too_big), LeafCountExceeded);
}

TEST(Network, DeviceOnlyAffectsAggregatedLatent) {
  Rng rng(7);
  auto params = init_params(tiny_config(7));
  auto a = random_input(rng, 3);
  auto b = a;
  b.device_vector[0] += 1.0;
  std::vector<EncodedInput> batch = {a, b};
  auto r = forward(params, batch);
  EXPECT_EQ(r.latents.z_x.row(0), r.latents.z_x.row(1));
  EXPECT_GT((r.latents.z.row(0) - r.latents.z.row(1)).norm(), 0.0);
}

TEST(Network, LossGrowsWithAlpha) {
  Rng rng(8);
  auto params = init_params(tiny_config(8));
  std::vector<EncodedInput> s = {random_input(rng, 1), random_input(rng, 2), random_input(rng, 2)};
  std::vector<EncodedInput> t = {random_input(rng, 1, 0.5), random_input(rng, 3, 0.5)};
  std::vector<double> y = {0.1, 0.9, 1.4};
  double prev = -1;
  for (double alpha : {0.0, 0.1, 0.5, 1.0, 2.0, 10.0}) {
    auto lg = loss_and_gradients(params, pointers(s), y, LossSpec{LossKind::kHybrid, 1e-3, 1.0, alpha, 5}, pointers(t));
    EXPECT_GE(lg.loss, prev);
    prev = lg.loss;
  }
}

TEST(Network, ParameterCountFollowsConfig) {
  const auto cfg = tiny_config();
  const auto p = init_params(cfg);
  std::size_t expected = (24 * 8 + 8);
  expected += 4 * (8 * 8 + 8) + 4 * 8 + (8 * 16 + 16) + (16 * 8 + 8);
  for (int l = 1; l <= 4; ++l) expected += static_cast<std::size_t>(l * 8 * 6 + 6);
  expected += (6 * 4 + 4) + (4 * 6 + 6) + (6 * 8 + 8) + (8 * 1 + 1);
  EXPECT_EQ(p.parameter_count(), expected);
  EXPECT_EQ(init_params(cfg), p);
  EXPECT_EQ(p.weights.leaf_embed.size(), 4u);
}

TEST(Optimizer, ScheduleAndFirstAdamStep) {
  CostModelConfig cfg;
  cfg.lr = 1e-2;
  EXPECT_EQ(scheduled_lr(cfg, 7), 1e-2);
  cfg.lr_schedule = LrSchedule::kCyclic;
  EXPECT_NEAR(scheduled_lr(cfg, 0), 1e-3, 1e-15);
  EXPECT_NEAR(scheduled_lr(cfg, 10), 1e-2, 1e-15);
  EXPECT_NEAR(scheduled_lr(cfg, 5), 5.5e-3, 1e-15);
  EXPECT_NEAR(scheduled_lr(cfg, 20), 1e-3, 1e-15);

  auto w = init_params(tiny_config()).weights;
  auto g = zeros_like(w);
  g.input.b.setConstant(3.0);
  Optimizer adam(OptimizerKind::kAdam, w, 0.0);
  const auto before = w.input.b;
  adam.step(w, g, 0.1);
  // Bias-corrected Adam moves every coordinate by lr on its first step.
  EXPECT_LT(((before - w.input.b).array() - 0.1).abs().maxCoeff(), 1e-7);
  auto w2 = init_params(tiny_config()).weights;
  Optimizer sgd(OptimizerKind::kSgd, w2, 0.0);
  sgd.step(w2, g, 0.1);
  EXPECT_LT(((before - w2.input.b).array() - 0.3).abs().maxCoeff(), 1e-12);
}

// Small end-to-end fixture shared by the training tests.
struct Fixture {
  features::DeviceSpec dev = features::find_builtin_device("synth_gpu");
  DeviceTable devices = make_device_table({dev});
  dataset::Dataset ds = dataset::split_dataset(dataset::generate_synthetic(160, {dev}, {}, 3), {}, 3);

  CostModelConfig config(int epochs) const {
    CostModelConfig c = tiny_config(11);
    c.n_leaf_max = 16;
    c.epochs = epochs;
    c.batch_size = 16;
    return c;
  }
};

TEST(Train, ZeroEpochsReturnsInitialParameters) {
  Fixture f;
  auto r = train(f.config(0), f.ds, f.devices);
  EXPECT_EQ(r.model.params, init_params(f.config(0)));
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, DeterministicLogAndWeights) {
  Fixture f;
  auto a = train(f.config(4), f.ds, f.devices);
  auto b = train(f.config(4), f.ds, f.devices);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.model.params, b.model.params);
  ASSERT_EQ(a.log.size(), 4u);
  EXPECT_LT(a.log.back().train_loss, a.log.front().train_loss);
  for (const auto& row : a.log) EXPECT_GE(row.val_mape, a.best_val_mape);
  std::ostringstream csv;
  write_log_csv(csv, a.log);
  EXPECT_EQ(csv.str().substr(0, 36), "epoch,train_loss,val_mape,val_rmse,l");
}

TEST(Train, RequiresSplits) {
  Fixture f;
  dataset::Dataset bare = f.ds;
  bare.splits.clear();
  EXPECT_THROW(train(f.config(1), bare, f.devices), EmptyDataset);
  auto bad = f.config(1);
  bad.n_heads = 3;
  EXPECT_THROW(train(bad, f.ds, f.devices), ConfigError);
}

TEST(Predict, InvertsTheLabelTransformAndIsPure) {
  Fixture f;
  auto r = train(f.config(1), f.ds, f.devices);
  CostModel m = r.model;
  const auto& s = f.ds.samples[0];
  // Force the output to transform(y*) through the last bias.
  m.params.weights.decoder.back().w.setZero();
  m.params.weights.decoder.back().b(0, 0) = m.labels.to_model(0.0125);
  EXPECT_NEAR(predict(m, s.compact, f.dev), 0.0125, 1e-12);
  m.params.weights.decoder.back().w.setConstant(0.01);
  const double p = predict(m, s.compact, f.dev);
  EXPECT_GT(p, 0.0);
  EXPECT_EQ(p, predict(m, s.compact, f.dev));
  // Outputs far beyond the label range have no preimage.
  m.params.weights.decoder.back().w.setZero();
  m.params.weights.decoder.back().b(0, 0) = m.labels.boxcox.lambda_bc < 0 ? 1e6 : -1e6;
  EXPECT_THROW(predict(m, s.compact, f.dev), DomainError);
}

TEST(Checkpoint, RoundTripAndTamperDetection) {
  Fixture f;
  auto r = train(f.config(2), f.ds, f.devices);
  const std::string text = save_checkpoint(r.model);
  const CostModel back = load_checkpoint(text);
  EXPECT_EQ(back.params, r.model.params);
  EXPECT_EQ(back.labels, r.model.labels);
  EXPECT_EQ(back.inputs, r.model.inputs);
  EXPECT_EQ(save_checkpoint(back), text);

  std::string tampered = text;
  const auto pos = tampered.find("\"data\":[") + 9;
  tampered[pos] = tampered[pos] == '1' ? '2' : '1';
  EXPECT_THROW(load_checkpoint(tampered), ChecksumMismatch);
  EXPECT_THROW(load_checkpoint("{}"), ValidationError);
  EXPECT_THROW(load_checkpoint("not json"), ValidationError);
}

TEST(Finetune, AlphaZeroWithoutTargetLabelsIsContinuedSourceTraining) {
  Fixture f;
  auto base = train(f.config(2), f.ds, f.devices).model;
  FinetuneData d;
  d.source = f.ds.subset(dataset::Split::kTrain);
  d.target = f.ds.subset(dataset::Split::kTest);
  auto cfg = f.config(2);
  cfg.alpha_cmd = 0.0;
  auto a = finetune(base, cfg, d, f.devices);
  // Same optimizer, data order and loss as two more epochs of plain training.
  auto b = finetune(base, cfg, FinetuneData{d.source, {d.source.front()}, {}, {}}, f.devices);
  EXPECT_EQ(a.model.params, b.model.params);
  EXPECT_FALSE(a.model.params == base.params);
}

TEST(Finetune, CmdTermShrinksDomainGap) {
  Fixture f;
  auto base = train(f.config(3), f.ds, f.devices).model;
  FinetuneData d;
  d.source = f.ds.subset(dataset::Split::kTrain);
  for (auto s : f.ds.subset(dataset::Split::kTrain)) {
    for (auto& v : s.compact.leaf_vectors)
      for (int j = 10; j <= 15; ++j) v[static_cast<std::size_t>(j)] += 2.0;
    d.target.push_back(s);
  }
  auto cfg = f.config(30);
  cfg.alpha_cmd = 1.0;
  auto r = finetune(base, cfg, d, f.devices);
  EXPECT_LT(r.cmd_after, r.cmd_before);
  auto again = finetune(base, cfg, d, f.devices);
  EXPECT_EQ(again.log, r.log);
  EXPECT_EQ(again.model.params, r.model.params);
}

TEST(Epsilon, ZeroWhenEverythingIsSelected) {
  Fixture f;
  auto m = train(f.config(1), f.ds, f.devices).model;
  std::vector<features::CompactAst> all;
  for (std::size_t i = 0; i < 10; ++i) all.push_back(f.ds.samples[i].compact);
  EXPECT_EQ(epsilon_diag(m, all, all), 0.0);
  std::vector<features::CompactAst> some(all.begin(), all.begin() + 3);
  const double e3 = epsilon_diag(m, all, some);
  some.push_back(all[7]);
  EXPECT_LE(epsilon_diag(m, all, some), e3);
  EXPECT_THROW(epsilon_diag(m, all, {}), EmptySelection);
}

TEST(Tune, ArgminDeterminismAndSingleTrial) {
  Fixture f;
  SearchSpace space;
  space.n_layers = {1};
  space.d_model = {8, 16};
  space.d_ff = {16};
  space.d_embed = {6};
  space.decoder_dims = {{8}};
  auto base = f.config(2);
  auto one = tune(space, 1, f.ds, f.devices, 5, base, 2);
  ASSERT_EQ(one.trials.size(), 1u);
  EXPECT_EQ(one.best, one.trials[0].config);

  auto a = tune(space, 3, f.ds, f.devices, 5, base, 2);
  auto b = tune(space, 3, f.ds, f.devices, 5, base, 2);
  ASSERT_EQ(a.trials.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.trials[i].config, b.trials[i].config);
    EXPECT_EQ(a.trials[i].val_mape, b.trials[i].val_mape);
    EXPECT_LE(a.trials[a.best_trial].val_mape, a.trials[i].val_mape);
  }
  EXPECT_EQ(a.trials[0].config, one.trials[0].config);
  EXPECT_THROW(tune(space, 0, f.ds, f.devices, 5, base), ConfigError);
}

}  // namespace
}  // namespace tpcost::costmodel
