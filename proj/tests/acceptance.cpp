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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cmd_oracle.hpp"
#include "costmodel_test_util.hpp"
#include "replay_oracle.hpp"
#include "tpcost/costmodel/checkpoint.hpp"
#include "tpcost/costmodel/epsilon.hpp"
#include "tpcost/costmodel/finetune.hpp"
#include "tpcost/costmodel/loss.hpp"
#include "tpcost/dataset/boxcox.hpp"
#include "tpcost/dataset/stats.hpp"
#include "tpcost/dataset/synth.hpp"
#include "tpcost/features/encoding.hpp"
#include "tpcost/replayer/simulate.hpp"
#include "tpcost/sampling/select.hpp"

namespace tpcost::acceptance {
namespace {

using costmodel::CostModel;
using costmodel::CostModelConfig;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

features::DeviceSpec gpu() { return features::find_builtin_device("synth_gpu"); }

costmodel::DeviceTable gpu_table() { return costmodel::make_device_table({gpu()}); }

std::vector<double> labels_of(const std::vector<dataset::Sample>& s) {
  std::vector<double> y;
  for (const auto& x : s) y.push_back(x.latency_s);
  return y;
}

costmodel::Metrics test_metrics(const CostModel& m, const std::vector<dataset::Sample>& samples) {
  return costmodel::evaluate(m, costmodel::encode_for(m, samples, gpu_table()), labels_of(samples));
}

dataset::Dataset desk_dataset(std::uint64_t seed, double sigma) {
  dataset::SynthOracleConfig oracle;
  oracle.noise_sigma = sigma;
  return dataset::split_dataset(dataset::generate_synthetic(2000, {gpu()}, oracle, seed), {}, seed);
}

// ---------------------------------------------------------------------------

Outcome gradients() {
  using namespace costmodel;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1);
  auto params = init_params(testing::tiny_config());
  std::vector<EncodedInput> source, target;
  for (int n : {1, 3, 2, 3}) source.push_back(testing::random_input(rng, n));
  for (int n : {2, 1, 3, 2}) target.push_back(testing::random_input(rng, n, 0.7));
  const auto sp = testing::pointers(source), tp = testing::pointers(target);
  const std::vector<double> y = {0.5, 1.5, 2.0, 0.8};

  // A 1e-5 step balances truncation (which scales with step^2) against
  // rounding in the loss.
  constexpr double kStep = 1e-5;
  const auto pre = loss_and_gradients(params, sp, y, LossSpec{LossKind::kHybrid, 1e-3, 0.0, 0.0, 5});
  const double e_pre = testing::gradient_check(params, pre.grads, [&](const CostModelParams& p) {
    return loss_pretrain(forward(p, sp).predictions, y, 1e-3);
  }, kStep);
  const auto fin = loss_and_gradients(params, sp, y, LossSpec{LossKind::kHybrid, 1e-3, 0.0, 1.0, 5}, tp);
  const double e_fin = testing::gradient_check(params, fin.grads, [&](const CostModelParams& p) {
    const auto rs = forward(p, sp);
    return loss_finetune(rs.predictions, y, rs.latents.z, forward(p, tp).latents.z, 1e-3, 1.0, 5);
  }, kStep);
  const double secs = seconds_since(t0);
  const bool ok = e_pre < 1e-5 && e_fin < 1e-5 && secs < 10;
  return {ok, fmt("max rel err pretrain %.2e, finetune %.2e; %.2f s", e_pre, e_fin, secs)};
}

// ---------------------------------------------------------------------------

Matrix random_set(Rng& rng, int max_rows, int cols, bool dyadic) {
  const int rows = dyadic ? 1 << rng.below(5) : 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_rows)));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = dyadic ? static_cast<double>(rng.between(-8, 12)) / 4 : rng.uniform(-2, 3);
  return m;
}

Outcome cmd_oracle() {
  Rng rng(2);
  double worst = 0;
  bool exact = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int cols = 1 + static_cast<int>(rng.below(3));
    const Matrix a = random_set(rng, 32, cols, false), b = random_set(rng, 32, cols, false);
    const double v = costmodel::cmd(a, b, 5);
    worst = std::max(worst, std::abs(v - testing::brute_force_cmd(a, b, 5)));
    exact = exact && costmodel::cmd(a, a, 5) == 0.0 && v == costmodel::cmd(b, a, 5);
  }
  // Translation invariance is checked bit for bit on quarter-integer sets with
  // power-of-two sizes, where every moment is exactly representable.
  bool translation = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int cols = 1 + static_cast<int>(rng.below(3));
    const Matrix a = random_set(rng, 16, cols, true), b = random_set(rng, 16, cols, true);
    const double shift = static_cast<double>(rng.between(-4, 4));
    const Matrix a2 = (a.array() + shift).matrix(), b2 = (b.array() + shift).matrix();
    translation = translation && costmodel::cmd(a, b, 5) == costmodel::cmd(a2, b2, 5);
    exact = exact && costmodel::cmd(a, b, 5) == costmodel::cmd(b, a, 5);
  }
  return {worst <= 1e-9 && exact && translation,
          fmt("max |cmd - oracle| %.2e; identity/symmetry exact: %s; translation exact: %s", worst,
              exact ? "yes" : "no", translation ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

std::vector<sampling::TaskFeatureSet> blob_tasks(std::uint64_t seed) {
  Rng rng(seed);
  const double centers[4][2] = {{0, 0}, {12, 0}, {0, 12}, {12, 12}};
  std::vector<sampling::TaskFeatureSet> tasks;
  for (int t = 0; t < 20; ++t) {
    const auto& c = centers[rng.below(4)];
    const double cx = c[0] + rng.normal(), cy = c[1] + rng.normal();
    Matrix x(5 + static_cast<int>(rng.below(11)), 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = cx + 0.5 * rng.normal(), x(i, 1) = cy + 0.5 * rng.normal();
    tasks.push_back({"t" + std::to_string(t), x});
  }
  return tasks;
}

Matrix points_of(const std::vector<sampling::TaskFeatureSet>& tasks, const std::vector<std::string>& ids) {
  std::vector<sampling::TaskFeatureSet> chosen;
  for (const auto& t : tasks)
    if (std::find(ids.begin(), ids.end(), t.task_id) != ids.end()) chosen.push_back(t);
  return sampling::stack_features(chosen);
}

Outcome selection() {
  const std::vector<sampling::TaskFeatureSet> hand = {
      {"A", column({0, 0.1})}, {"B", column({10, 10.1})}, {"C", column({5})}};
  const auto s = sampling::select_tasks(sampling::stack_features(hand), 2, hand, 0, column({0.05, 10.05}));
  const bool hand_ok = s.task_ids == std::vector<std::string>{"A", "B"};
  double sel = 0, rnd = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto tasks = blob_tasks(seed);
    const Matrix all = sampling::stack_features(tasks);
    sel += costmodel::epsilon_from_latents(all, points_of(tasks, sampling::select_tasks(tasks, 4, seed).task_ids));
    rnd += costmodel::epsilon_from_latents(all, points_of(tasks, sampling::random_tasks(tasks, 4, seed)));
  }
  sel /= 10, rnd /= 10;
  return {hand_ok && sel <= rnd,
          fmt("hand example %s; mean epsilon selected %.3f vs random %.3f", hand_ok ? "[A,B]" : "WRONG", sel, rnd)};
}

// ---------------------------------------------------------------------------

double grid_boxcox_lambda(const std::vector<double>& y) {
  double log_sum = 0;
  for (double v : y) log_sum += std::log(v);
  double best = 0, best_ll = -INFINITY;
  for (int k = -200; k <= 200; ++k) {
    const double lam = k * 0.01;
    std::vector<double> t;
    for (double v : y) t.push_back(k == 0 ? std::log(v) : (std::pow(v, lam) - 1) / lam);
    const double ll = -0.5 * static_cast<double>(y.size()) * std::log(stats::central_moment(t, 2)) + (lam - 1) * log_sum;
    if (ll > best_ll) best_ll = ll, best = lam;
  }
  return best;
}

// Yeo-Johnson for non-negative data, fitted by profile likelihood with a
// coarse grid over a wide bracket followed by a fine local grid.
std::vector<double> yeo_johnson_reference(const std::vector<double>& y) {
  auto transform = [&](double lam) {
    std::vector<double> t;
    for (double v : y) t.push_back(std::abs(lam) < 1e-12 ? std::log1p(v) : (std::pow(1 + v, lam) - 1) / lam);
    return t;
  };
  double log_sum = 0;
  for (double v : y) log_sum += std::log1p(v);
  auto ll = [&](double lam) {
    const double var = stats::central_moment(transform(lam), 2);
    const double v = -0.5 * static_cast<double>(y.size()) * std::log(var) + (lam - 1) * log_sum;
    return std::isfinite(v) ? v : -INFINITY;
  };
  double best = 0, best_ll = -INFINITY;
  for (double lam = -1000; lam <= 1000; lam += 0.5) {
    if (const double v = ll(lam); v > best_ll) best_ll = v, best = lam;
  }
  const double centre = best;
  for (double lam = centre - 0.5; lam <= centre + 0.5; lam += 0.001) {
    if (const double v = ll(lam); v > best_ll) best_ll = v, best = lam;
  }
  return transform(best);
}

Outcome boxcox() {
  Rng rng(4);
  std::vector<double> y(10000);
  for (auto& v : y) v = std::exp(-6.0 + 1.2 * rng.normal());
  const auto bc = dataset::fit_boxcox(y);
  const double grid = grid_boxcox_lambda(y);
  std::vector<double> t;
  for (double v : y) t.push_back(bc.apply(v));
  const double s_raw = std::abs(stats::skewness(y));
  const double s_bc = std::abs(stats::skewness(t));
  const double s_yj = std::abs(stats::skewness(yeo_johnson_reference(y)));
  const bool ok = bc.lambda_bc >= -0.1 && bc.lambda_bc <= 0.1 && std::abs(bc.lambda_bc - grid) <= 0.02 && s_bc < s_raw &&
                  s_bc < s_yj;
  return {ok, fmt("lambda %.4f (grid %.2f); |skew| raw %.3f, box-cox %.4f, yeo-johnson %.3f", bc.lambda_bc, grid, s_raw,
                  s_bc, s_yj)};
}

// ---------------------------------------------------------------------------

Outcome positional() {
  std::vector<int> ordering;
  for (int v = 0; v < 4096; ++v) ordering.push_back(v);
  const Matrix pe = features::positional_encoding(ordering);
  double worst = 0;
  bool bounded = true;
  for (Eigen::Index i = 0; i < pe.rows(); ++i) {
    for (Eigen::Index j = 0; j < pe.cols(); ++j) {
      const long double angle =
          static_cast<long double>(i) / std::pow(10000.0L, 2.0L * static_cast<long double>(j / 2) / pe.cols());
      const long double ref = j % 2 == 0 ? std::sin(angle) : std::cos(angle);
      worst = std::max(worst, static_cast<double>(std::abs(pe(i, j) - ref)));
      bounded = bounded && std::abs(pe(i, j)) <= 1.0;
    }
  }
  bool zero_row = true;
  for (Eigen::Index j = 0; j < pe.cols(); ++j) zero_row = zero_row && pe(0, j) == (j % 2 == 0 ? 0.0 : 1.0);
  return {worst <= 1e-9 && bounded && zero_row,
          fmt("max |pe - ref| %.2e over %d rows; bounded %s; zero row %s", worst, static_cast<int>(pe.rows()),
              bounded ? "yes" : "no", zero_row ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

CostModelConfig desk_config(std::uint64_t seed, int epochs = 300) {
  CostModelConfig c;
  c.epochs = epochs;
  c.seed = seed;
  return c;
}

Outcome desk_learning() {
  const auto ds = desk_dataset(1, 0.0);
  const std::clock_t c0 = std::clock();
  const auto r = costmodel::train(desk_config(0), ds, gpu_table());
  const double cpu_min = static_cast<double>(std::clock() - c0) / CLOCKS_PER_SEC / 60;
  const auto m = test_metrics(r.model, ds.subset(dataset::Split::kTest));
  return {m.mape <= 0.20 && cpu_min <= 10,
          fmt("test MAPE %.2f%% (best epoch %d of 300); %.2f CPU-minutes", 100 * m.mape, r.best_epoch, cpu_min)};
}

// ---------------------------------------------------------------------------

// Source: default synthetic programs. Target: the same generator with every
// per-iteration op count remapped (c -> 4c + 3), labeled by the oracle, so the
// op features shift and latencies change with them. Both arms see the same 64
// labeled target programs; only alpha differs.
Outcome finetuning() {
  double mape0 = 0, mape1 = 0;
  bool cmd_ok = true;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto src = desk_dataset(100 + seed, 0.0);
    const auto pre = costmodel::train(desk_config(seed), src, gpu_table()).model;
    dataset::SynthOptions shifted;
    shifted.op_scale = 4;
    shifted.op_offset = 3;
    const auto tgt = dataset::generate_synthetic(800, {gpu()}, {}, 200 + seed, shifted).samples;
    const std::vector<dataset::Sample> pool(tgt.begin(), tgt.begin() + 400), held(tgt.begin() + 400, tgt.end());

    costmodel::FinetuneData data;
    data.source = src.subset(dataset::Split::kTrain);
    data.target = pool;
    data.target_labeled.assign(pool.begin(), pool.begin() + 64);
    costmodel::FinetuneOptions opts;
    opts.cmd_batch = 256;
    auto run = [&](double alpha) {
      CostModelConfig c = pre.params.config;
      c.alpha_cmd = alpha;
      c.lr = 1e-4;
      c.epochs = 20;
      c.seed = seed;
      return costmodel::finetune(pre, c, data, gpu_table(), opts);
    };
    const auto r0 = run(0.0), r1 = run(1.0);
    const double m0 = test_metrics(r0.model, held).mape, m1 = test_metrics(r1.model, held).mape;
    const double drop = 1 - r1.cmd_after / r1.cmd_before;
    cmd_ok = cmd_ok && drop >= 0.30;
    mape0 += m0 / 3, mape1 += m1 / 3;
    per_seed += fmt(" [seed %d: cmd -%.0f%%, mape a0 %.3f a1 %.3f]", static_cast<int>(seed), 100 * drop, m0, m1);
  }
  return {cmd_ok && mape1 < mape0, fmt("mean target MAPE alpha=1 %.4f vs alpha=0 %.4f;", mape1, mape0) + per_seed};
}

// ---------------------------------------------------------------------------

Outcome replayer_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(8);
  int mismatches = 0, violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_dev = 1 + static_cast<int>(rng.below(3));
    const auto g = testing::random_dag(rng, 12, n_dev);
    const auto r = replayer::simulate(g, n_dev);
    const auto o = testing::brute_force_replay(g, n_dev);
    bool same = r.iteration_time == o.iteration_time;
    for (const auto& n : g.nodes)
      same = same && r.schedule.at(n.id).start == o.schedule.at(n.id).first &&
             r.schedule.at(n.id).end == o.schedule.at(n.id).second;
    mismatches += same ? 0 : 1;

    std::map<std::string, const replayer::DfgNode*> by_id;
    for (const auto& n : g.nodes) by_id[n.id] = &n;
    bool ok = true;
    for (const auto& [a, b] : g.edges) ok = ok && r.schedule.at(b).start >= r.schedule.at(a).end + by_id[a]->gap;
    for (const auto& x : g.nodes) {
      for (const auto& y : g.nodes) {
        if (&x == &y || x.device != y.device || x.duration + x.gap == 0 || y.duration + y.gap == 0) continue;
        const auto& p = r.schedule.at(x.id);
        const auto& q = r.schedule.at(y.id);
        ok = ok && (p.end + x.gap <= q.start || q.end + y.gap <= p.start);
      }
    }
    if (n_dev == 1) {
      double total = 0;
      for (const auto& n : g.nodes) total += n.duration + n.gap;
      ok = ok && std::abs(r.iteration_time - total) <= 1e-12 * std::max(1.0, total);
    }
    violations += ok ? 0 : 1;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && violations == 0 && secs < 30,
          fmt("%d mismatches, %d invariant violations over 1000 DAGs; %.2f s", mismatches, violations, secs)};
}

// ---------------------------------------------------------------------------

Outcome loss_ablation() {
  double mape[3] = {}, rmse[3] = {};
  const costmodel::LossKind kinds[3] = {costmodel::LossKind::kHybrid, costmodel::LossKind::kMse,
                                        costmodel::LossKind::kMape};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto ds = desk_dataset(300 + seed, 0.05);
    const auto test = ds.subset(dataset::Split::kTest);
    for (int k = 0; k < 3; ++k) {
      auto c = desk_config(seed);
      c.loss = kinds[k];
      const auto m = test_metrics(costmodel::train(c, ds, gpu_table()).model, test);
      mape[k] += m.mape / 3;
      rmse[k] += m.rmse / 3;
    }
  }
  return {mape[0] <= mape[1] && rmse[0] <= rmse[2],
          fmt("mean MAPE hybrid %.4f vs mse %.4f; mean RMSE hybrid %.3e vs mape %.3e", mape[0], mape[1], rmse[0],
              rmse[2])};
}

// ---------------------------------------------------------------------------

Outcome determinism() {
  auto data = dataset::generate_synthetic(240, {gpu()}, {}, 10);
  const auto ds = dataset::split_dataset(data, {}, 10);
  CostModelConfig c = testing::tiny_config(3);
  c.n_leaf_max = ir::kDefaultMaxLeaves;
  c.epochs = 5;
  c.batch_size = 16;
  auto train_once = [&] {
    const auto r = costmodel::train(c, ds, gpu_table());
    std::ostringstream log;
    costmodel::write_log_csv(log, r.log);
    return log.str() + costmodel::save_checkpoint(r.model);
  };
  const bool train_ok = train_once() == train_once();

  const auto base = costmodel::train(c, ds, gpu_table()).model;
  costmodel::FinetuneData fd;
  fd.source = ds.subset(dataset::Split::kTrain);
  fd.target = dataset::generate_synthetic(80, {gpu()}, {}, 11).samples;
  fd.valid = ds.subset(dataset::Split::kValid);
  auto finetune_once = [&] {
    const auto r = costmodel::finetune(base, c, fd, gpu_table());
    std::ostringstream log;
    costmodel::write_log_csv(log, r.log);
    return log.str() + costmodel::save_checkpoint(r.model) + fmt("%.17g %.17g", r.cmd_before, r.cmd_after);
  };
  const bool finetune_ok = finetune_once() == finetune_once();

  const auto tasks = sampling::task_features(data.samples);
  const bool sample_ok = sampling::select_tasks(tasks, 4, 5).task_ids == sampling::select_tasks(tasks, 4, 5).task_ids;

  Rng rng(12);
  bool sim_ok = true;
  for (int i = 0; i < 50; ++i) {
    const auto g = testing::random_dag(rng, 12, 3);
    const auto a = replayer::simulate(g, 3), b = replayer::simulate(g, 3);
    sim_ok = sim_ok && a.iteration_time == b.iteration_time && a.order == b.order;
    for (const auto& [id, iv] : a.schedule)
      sim_ok = sim_ok && iv.start == b.schedule.at(id).start && iv.end == b.schedule.at(id).end;
  }
  auto yn = [](bool b) { return b ? "identical" : "DIFFERENT"; };
  return {train_ok && finetune_ok && sample_ok && sim_ok,
          fmt("train %s, finetune %s, sample %s, simulate %s", yn(train_ok), yn(finetune_ok), yn(sample_ok),
              yn(sim_ok))};
}

}  // namespace
}  // namespace tpcost::acceptance

int main(int argc, char** argv) {
  using namespace tpcost::acceptance;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient check", gradients},
      {"cmd oracle", cmd_oracle},
      {"task selection", selection},
      {"box-cox", boxcox},
      {"positional encoding", positional},
      {"desk-scale learning", desk_learning},
      {"cross-domain fine-tuning", finetuning},
      {"replayer oracle", replayer_oracle},
      {"loss ablation", loss_ablation},
      {"determinism", determinism},
  };
  // Optional arguments pick a subset of criteria by number.
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %d (%s): %s  %s\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
