#include <cmath>

#include "doctest.h"
#include "mnb/harness.hpp"
#include "support/oracles.hpp"

using namespace mnb;

namespace {

struct Fixture {
  Dataset train;
  Dataset test;
  TaskSequence tasks;

  Fixture(std::size_t classes, std::size_t stages, std::uint64_t seed, std::size_t per_class = 10) {
    auto pair = gen_blobs(classes, 4, per_class, 5, 5.0, seed);
    train = std::move(pair.first);
    test = std::move(pair.second);
    tasks = build_task_sequence(train, test, stages, seed + 1);
  }
};

HarnessConfig small_config() {
  HarnessConfig config;
  config.hidden_dims = {8};
  config.use_batch_norm = true;
  config.memory_per_class = 3;
  config.stage.epochs = 3;
  config.stage.batch_size = 8;
  config.stage.lr = 0.05;
  config.stage.momentum = 0.9;
  config.stage.intra_period = 1;
  config.stage.bound_period = 1;
  config.stage.bound_radius = 1.0;
  return config;
}

// Replica of the plain training loop: seeded shuffles, minibatch SGD, no
// hooks. Mirrors the harness's stream layout so the reduction is bitwise.
struct ReferenceLoop {
  Model model;
  std::vector<ParameterSet> epoch_snapshots;
};

ReferenceLoop reference_epochs(Model model, const Dataset& train,
                               const std::vector<std::size_t>& pool, const StageConfig& cfg,
                               SplitRng shuffle_rng) {
  ReferenceLoop out{std::move(model), {}};
  MomentumState momentum = MomentumState::zeros_like(out.model.trainable_params());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = pool;
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::vector<std::size_t> batch_idx(order.begin() + start, order.begin() + stop);
      std::vector<ClassId> labels;
      for (std::size_t i : batch_idx) labels.push_back(train.labels[i]);
      const BackwardResult result = backward(out.model, train.gather(batch_idx), labels);
      ParameterSet params = out.model.trainable_params();
      sgd_step(params, result.grads, momentum, cfg.lr, cfg.momentum);
      out.model.set_trainable_params(params);
    }
    out.epoch_snapshots.push_back(out.model.trainable_params());
  }
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("stage 2 starts from the stage 1 model under inter-merging") {
  Fixture fx(6, 3, 10);
  CilHarness harness(&fx.train, &fx.test, fx.tasks, small_config(), 42);

  StageState s1 = harness.init_stage(1, nullptr);
  harness.run_stage(s1);
  const ParameterSet theta_1 = s1.model.extractor_params();

  StageState s2 = harness.init_stage(2, &s1);
  CHECK(oracles::bitwise_equal(s2.model.extractor_params(), theta_1));
  CHECK(s2.base.has_value());
  CHECK(s2.base->stage_index == 2);
  // head rows for stage 1 classes are the stage 1 head, bitwise
  for (std::size_t r = 0; r < s1.model.num_classes(); ++r) {
    for (std::size_t c = 0; c < s1.model.feature_dim(); ++c) {
      CHECK(s2.model.head_weight().at(r, c) == s1.model.head_weight().at(r, c));
    }
  }
}

TEST_CASE("stage 3 starts from the two-model average under inter-merging") {
  Fixture fx(6, 3, 11);
  CilHarness harness(&fx.train, &fx.test, fx.tasks, small_config(), 43);

  StageState s1 = harness.init_stage(1, nullptr);
  harness.run_stage(s1);
  const ParameterSet theta_1 = s1.model.extractor_params();
  StageState s2 = harness.init_stage(2, &s1);
  harness.run_stage(s2);
  const ParameterSet theta_2 = s2.model.extractor_params();

  StageState s3 = harness.init_stage(3, &s2);
  const ParameterSet expected = oracles::offline_mean({theta_1, theta_2});
  CHECK(oracles::flat_l2_diff(s3.model.extractor_params(), expected) <=
        1e-12 * oracles::flat_l2(expected));
}

TEST_CASE("without inter-merging the next stage continues from the final model") {
  Fixture fx(6, 3, 12);
  HarnessConfig config = small_config();
  config.stage.enable_inter = false;
  CilHarness harness(&fx.train, &fx.test, fx.tasks, config, 44);

  StageState s1 = harness.init_stage(1, nullptr);
  harness.run_stage(s1);
  StageState s2 = harness.init_stage(2, &s1);

  CHECK(oracles::bitwise_equal(s2.model.extractor_params(), s1.model.extractor_params()));
  for (std::size_t r = 0; r < s1.model.num_classes(); ++r) {
    CHECK(s2.model.head_bias()[r] == s1.model.head_bias()[r]);
  }
  CHECK(s2.model.num_classes() ==
        s1.model.num_classes() + fx.tasks.classes_of(2).size());
}

TEST_CASE("init_stage validates its preconditions") {
  Fixture fx(6, 3, 13);
  CilHarness harness(&fx.train, &fx.test, fx.tasks, small_config(), 45);
  CHECK_THROWS_AS(harness.init_stage(2, nullptr), std::invalid_argument);
  StageState s1 = harness.init_stage(1, nullptr);
  CHECK_THROWS_AS(harness.init_stage(2, &s1), std::invalid_argument);  // not finalized
  CHECK_THROWS_AS(harness.init_stage(4, nullptr), std::invalid_argument);
}

TEST_CASE("zero epochs leaves the model untouched and the report empty") {
  Fixture fx(6, 3, 14);
  HarnessConfig config = small_config();
  config.stage.epochs = 0;
  CilHarness harness(&fx.train, &fx.test, fx.tasks, config, 46);
  StageState s1 = harness.init_stage(1, nullptr);
  const ParameterSet before = s1.model.trainable_params();
  const StageReport report = harness.run_stage(s1);
  CHECK(report.epoch_mean_loss.empty());
  CHECK(report.intra_merges == 0);
  CHECK(oracles::bitwise_equal(s1.model.trainable_params(), before));
}

TEST_CASE("bounding keeps the shared displacement inside the ball every epoch") {
  Fixture fx(6, 3, 15);
  HarnessConfig config = small_config();
  config.stage.epochs = 5;
  config.stage.bound_period = 1;
  config.stage.bound_radius = 0.5;
  config.stage.enable_intra = false;
  CilHarness harness(&fx.train, &fx.test, fx.tasks, config, 47);

  StageState s1 = harness.init_stage(1, nullptr);
  harness.run_stage(s1);
  StageState s2 = harness.init_stage(2, &s1);
  const StageReport report = harness.run_stage(s2);

  CHECK(report.bound_checks == 5);
  for (double norm : report.bounded_displacements) CHECK(norm <= 0.5 + 1e-9);
  CHECK(harness.shared_displacement(s2).norm <= 0.5 + 1e-9);
}

TEST_CASE("with merges after every epoch the final weights are the snapshot mean") {
  Fixture fx(6, 3, 16);
  HarnessConfig config = small_config();
  config.stage.epochs = 5;
  config.stage.intra_period = 1;
  config.stage.enable_bound = false;
  config.use_batch_norm = false;  // weight comparison only; BN refresh is separate
  CilHarness harness(&fx.train, &fx.test, fx.tasks, config, 48);

  StageState s1 = harness.init_stage(1, nullptr);
  const Model initial = s1.model;
  const StageReport report = harness.run_stage(s1);
  CHECK(report.intra_merges == 5);

  const ReferenceLoop ref =
      reference_epochs(initial, fx.train, harness.stage_data_indices(harness.init_stage(1, nullptr)),
                       config.stage, SplitRng(48).stream("shuffle").stream("stage1"));
  const ParameterSet expected = oracles::offline_mean(ref.epoch_snapshots);
  CHECK(oracles::flat_l2_diff(s1.model.trainable_params(), expected) <=
        1e-12 * oracles::flat_l2(expected));
}

TEST_CASE("colliding hooks bound first so the merged model stays feasible") {
  Fixture fx(6, 3, 17);
  HarnessConfig config = small_config();
  config.stage.epochs = 4;
  config.stage.intra_period = 2;
  config.stage.bound_period = 2;
  config.stage.bound_radius = 0.2;
  CilHarness harness(&fx.train, &fx.test, fx.tasks, config, 49);

  StageState s1 = harness.init_stage(1, nullptr);
  harness.run_stage(s1);
  StageState s2 = harness.init_stage(2, &s1);
  harness.run_stage(s2);
  // the finalized model is a mean of in-ball snapshots, hence in the ball
  CHECK(harness.shared_displacement(s2).norm <= 0.2 + 1e-9);
}

TEST_CASE("memory covers exactly the classes seen so far within budget") {
  Fixture fx(6, 3, 18);
  HarnessConfig config = small_config();
  config.memory_per_class = 2;
  CilHarness harness(&fx.train, &fx.test, fx.tasks, config, 50);

  StageState state = harness.init_stage(1, nullptr);
  harness.run_stage(state);
  for (std::size_t k = 2; k <= 3; ++k) {
    StageState next = harness.init_stage(k, &state);
    harness.run_stage(next);
    state = std::move(next);

    const auto seen = fx.tasks.seen_up_to(k);
    CHECK(state.memory.classes().size() == seen.size());
    for (const auto& [id, indices] : state.memory.per_class) {
      CHECK(indices.size() <= 2);
      for (std::size_t i : indices) CHECK(fx.train.labels[i] == id);
    }
  }
}

TEST_CASE("batchnorm refresh strategies") {
  SUBCASE("NOCHANGE leaves the model bitwise untouched") {
    Fixture fx(4, 2, 19);
    SplitRng init = SplitRng(1).stream("init");
    Model model({DenseLayer{4, 6}, BatchNormLayer{6}, ReluLayer{}}, {0, 1}, init);
    const Model before = model;
    recompute_bn_stats(model, fx.train, {0, 1, 2}, BnStrategy::kNoChange, 4, SplitRng(2));
    CHECK(oracles::bitwise_equal(model.bn_stats()[0].running_mean,
                                 before.bn_stats()[0].running_mean));
    CHECK(oracles::bitwise_equal(model.trainable_params(), before.trainable_params()));
  }

  SUBCASE("models without batchnorm are untouched under every strategy") {
    Fixture fx(4, 2, 20);
    SplitRng init = SplitRng(3).stream("init");
    Model model({DenseLayer{4, 6}, ReluLayer{}}, {0, 1}, init);
    const Model before = model;
    for (BnStrategy strategy : {BnStrategy::kOurs, BnStrategy::kReset, BnStrategy::kNoChange}) {
      recompute_bn_stats(model, fx.train, {}, strategy, 4, SplitRng(4));
      CHECK(oracles::bitwise_equal(model.trainable_params(), before.trainable_params()));
    }
  }

  SUBCASE("empty data is rejected when forwarding is required") {
    Fixture fx(4, 2, 21);
    SplitRng init = SplitRng(5).stream("init");
    Model model({BatchNormLayer{4}}, {0, 1}, init);
    CHECK_THROWS_AS(recompute_bn_stats(model, fx.train, {}, BnStrategy::kOurs, 4, SplitRng(6)),
                    std::invalid_argument);
  }

  SUBCASE("RESET converges to the population statistics of the stream") {
    // i.i.d. normal(3, 2) activations straight into a lone BN layer
    const std::size_t dim = 4, batch = 256, batches = 50;
    Dataset data;
    data.num_classes = 1;
    data.labels.assign(batch * batches, 0);
    data.features = Tensor({batch * batches, dim});
    SplitRng gen(7);
    for (double& v : data.features.values()) v = 3.0 + 2.0 * gen.normal();

    SplitRng init = SplitRng(8).stream("init");
    Model model({BatchNormLayer{dim}}, {0}, init);
    std::vector<std::size_t> indices(data.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;

    recompute_bn_stats(model, data, indices, BnStrategy::kReset, batch, SplitRng(9));

    // closed-form EMA over the replayed batch statistics
    std::vector<std::size_t> order = indices;
    SplitRng replay(9);
    replay.shuffle(order);
    const double m = model.bn_momentum();
    std::vector<double> mean(dim, 0.0), var(dim, 1.0);  // reset start
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t d = 0; d < dim; ++d) {
        double bm = 0.0, bv = 0.0;
        for (std::size_t r = 0; r < batch; ++r) bm += data.features.at(order[b * batch + r], d);
        bm /= batch;
        for (std::size_t r = 0; r < batch; ++r) {
          const double diff = data.features.at(order[b * batch + r], d) - bm;
          bv += diff * diff;
        }
        bv /= batch;
        mean[d] = (1.0 - m) * mean[d] + m * bm;
        var[d] = (1.0 - m) * var[d] + m * bv;
      }
    }
    for (std::size_t d = 0; d < dim; ++d) {
      CHECK(model.bn_stats()[0].running_mean[d] == doctest::Approx(mean[d]).epsilon(1e-12));
      CHECK(model.bn_stats()[0].running_var[d] == doctest::Approx(var[d]).epsilon(1e-12));
      // within 5% of the population stats after 50 batches at momentum 0.1
      CHECK(std::abs(model.bn_stats()[0].running_mean[d] - 3.0) < 0.05 * 3.0);
      CHECK(std::abs(model.bn_stats()[0].running_var[d] - 4.0) < 0.05 * 4.0);
    }
  }
}

TEST_CASE("all hooks disabled reduces to plain replay fine-tuning, bitwise") {
  Fixture fx(6, 3, 22);
  HarnessConfig config = small_config();
  config.stage.enable_inter = false;
  config.stage.enable_intra = false;
  config.stage.enable_bound = false;
  config.stage.epochs = 3;
  const std::uint64_t seed = 51;
  CilHarness harness(&fx.train, &fx.test, fx.tasks, config, seed);

  // harness path
  StageState state = harness.init_stage(1, nullptr);
  harness.run_stage(state);
  for (std::size_t k = 2; k <= 3; ++k) {
    StageState next = harness.init_stage(k, &state);
    harness.run_stage(next);
    state = std::move(next);
  }

  // reference path: same streams, no harness machinery
  SplitRng root(seed);
  Model model = harness.init_stage(1, nullptr).model;
  ExemplarMemory memory{config.memory_per_class, {}};
  for (std::size_t k = 1; k <= 3; ++k) {
    if (k > 1) {
      SplitRng expand_rng = root.stream("init").stream("stage" + std::to_string(k));
      model = expand_classifier(model, fx.tasks.classes_of(k), expand_rng);
    }
    std::vector<std::size_t> pool = fx.tasks.train_indices[k - 1];
    const auto replay = memory.all_indices();
    pool.insert(pool.end(), replay.begin(), replay.end());
    model = reference_epochs(model, fx.train, pool, config.stage,
                             root.stream("shuffle").stream("stage" + std::to_string(k)))
                .model;
    for (ClassId id : fx.tasks.classes_of(k)) {
      std::vector<std::size_t> candidates;
      for (std::size_t i : fx.tasks.train_indices[k - 1]) {
        if (fx.train.labels[i] == id) candidates.push_back(i);
      }
      const std::uint64_t exemplar_seed =
          root.stream("data")
              .stream("exemplar-stage" + std::to_string(k) + "-class" + std::to_string(id))
              .seed();
      memory.per_class[id] = select_exemplars(model, fx.train, candidates,
                                              config.memory_per_class,
                                              config.exemplar_method, exemplar_seed);
    }
  }

  CHECK(oracles::bitwise_equal(state.model.trainable_params(), model.trainable_params()));
  for (std::size_t i = 0; i < model.bn_stats().size(); ++i) {
    CHECK(oracles::bitwise_equal(state.model.bn_stats()[i].running_mean,
                                 model.bn_stats()[i].running_mean));
    CHECK(oracles::bitwise_equal(state.model.bn_stats()[i].running_var,
                                 model.bn_stats()[i].running_var));
  }
}

TEST_CASE("identical seeds give bitwise identical full runs") {
  Fixture fx(6, 3, 23);
  auto run_once = [&]() {
    CilHarness harness(&fx.train, &fx.test, fx.tasks, small_config(), 99);
    StageState state = harness.init_stage(1, nullptr);
    harness.run_stage(state);
    for (std::size_t k = 2; k <= 3; ++k) {
      StageState next = harness.init_stage(k, &state);
      harness.run_stage(next);
      state = std::move(next);
    }
    return state;
  };
  const StageState a = run_once();
  const StageState b = run_once();
  CHECK(oracles::bitwise_equal(a.model.trainable_params(), b.model.trainable_params()));
}

TEST_CASE("evaluation covers every seen class and stores raw predictions") {
  Fixture fx(6, 3, 24);
  CilHarness harness(&fx.train, &fx.test, fx.tasks, small_config(), 52);
  StageState s1 = harness.init_stage(1, nullptr);
  harness.run_stage(s1);
  StageState s2 = harness.init_stage(2, &s1);
  harness.run_stage(s2);

  const StageEval eval = harness.evaluate(s2.model, 2);
  CHECK(eval.seen_classes == fx.tasks.seen_up_to(2));
  CHECK(eval.per_class_acc.size() == eval.seen_classes.size());
  std::size_t expected_samples = 0;
  for (std::size_t k = 1; k <= 2; ++k) expected_samples += fx.tasks.test_indices[k - 1].size();
  CHECK(eval.sample_indices.size() == expected_samples);
  CHECK(eval.true_labels.size() == expected_samples);

  // overall accuracy recomputes from the raw predictions
  std::size_t correct = 0;
  for (std::size_t i = 0; i < eval.true_labels.size(); ++i) {
    if (eval.true_labels[i] == eval.predicted_labels[i]) ++correct;
  }
  CHECK(eval.overall_acc ==
        doctest::Approx(static_cast<double>(correct) / expected_samples).epsilon(1e-15));
}

TEST_SUITE_END();
