#include <doctest.h>

#include <cmath>

#include "sodkit/rng.hpp"
#include "sodkit/synth.hpp"
#include "sodkit/trainer.hpp"
#include "support.hpp"

using namespace sodkit;

namespace {

std::vector<TrainItem> small_items(int count, uint64_t seed, const HdaConfig& cfg,
                                   int size = 32) {
  SetTemplate tmpl;
  tmpl.size = size;
  const std::vector<Scene> scenes = generate_scenes(count, seed, tmpl);
  std::vector<TrainItem> items;
  for (size_t i = 0; i < scenes.size(); ++i) {
    items.push_back(
        make_train_item("it" + std::to_string(i), scenes[i].image, scenes[i].gt, cfg));
  }
  return items;
}

}  // namespace

TEST_CASE("feature stack shape and standardization") {
  Rng rng(701);
  const Tensor3 image = replicate_channels(testsup::random_gray(rng, 20, 24), 3);
  const Tensor3 f = featurize(image);
  REQUIRE(f.channels == kFeatureCount);
  REQUIRE(f.height == 20);
  REQUIRE(f.width == 24);
  f.check_finite("features");

  const size_t plane = static_cast<size_t>(20) * 24;
  for (int k = 0; k < kFeatureCount; ++k) {
    double mean = 0.0, var = 0.0;
    for (size_t i = 0; i < plane; ++i) mean += f.plane(k)[i];
    mean /= static_cast<double>(plane);
    for (size_t i = 0; i < plane; ++i) {
      var += (f.plane(k)[i] - mean) * (f.plane(k)[i] - mean);
    }
    var /= static_cast<double>(plane);
    REQUIRE(std::abs(mean) < 1e-9);
    REQUIRE(var == doctest::Approx(1.0).epsilon(1e-9));
  }

  CHECK_THROWS_AS(featurize(Tensor3(1, 8, 8, 0.0)), ContractError);
}

TEST_CASE("constant images give all-zero features") {
  const Tensor3 image(3, 10, 10, 0.5);
  const Tensor3 f = featurize(image);
  for (double v : f.values) REQUIRE(v == 0.0);
}

TEST_CASE("prediction is the logistic response") {
  Tensor3 f(kFeatureCount, 1, 1, 0.0);
  f.at(2, 0, 0) = 2.0;
  PixelModel m;
  m.weights.assign(kFeatureCount, 0.0);
  m.weights[2] = 1.5;
  m.bias = -1.0;
  const GrayMap p = predict(m, f);
  CHECK(p.values[0] == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));

  PixelModel bad;
  bad.weights.assign(3, 0.0);
  CHECK_THROWS_AS(predict(bad, f), ContractError);
}

TEST_CASE("parameter gradient matches finite differences") {
  HdaConfig cfg;
  cfg.neighborhood_side = 5;
  cfg.morph_iterations = 1;
  const auto items = small_items(2, 19, cfg, 16);

  Rng rng(703);
  PixelModel model;
  model.weights.resize(kFeatureCount);
  for (auto& w : model.weights) w = rng.uniform(-0.3, 0.3);
  model.bias = 0.1;

  for (const LossMode mode : {LossMode::hda, LossMode::bce_iou}) {
    const ParamGrad pg = training_loss_grad(model, items, mode, cfg);
    const double step = 1e-5;
    for (int k = 0; k <= kFeatureCount; ++k) {
      PixelModel probe = model;
      double* slot = k < kFeatureCount ? &probe.weights[static_cast<size_t>(k)] : &probe.bias;
      const double analytic = k < kFeatureCount ? pg.d_weights[static_cast<size_t>(k)] : pg.d_bias;
      *slot += step;
      const double up = training_loss_grad(probe, items, mode, cfg).loss;
      *slot -= 2.0 * step;
      const double dn = training_loss_grad(probe, items, mode, cfg).loss;
      const double fd = (up - dn) / (2.0 * step);
      REQUIRE(std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6}) <=
              1e-4);
    }
  }
}

TEST_CASE("zero learning rate leaves the model at its initialization") {
  HdaConfig cfg;
  cfg.neighborhood_side = 5;
  cfg.morph_iterations = 1;
  const auto items = small_items(2, 23, cfg, 16);
  TrainConfig tc;
  tc.learning_rate = 0.0;
  tc.epochs = 1;
  tc.seed = 4;
  const TrainResult r = train(items, tc, cfg);
  REQUIRE(r.loss_trace.size() == 2);
  CHECK(r.loss_trace[0] == r.loss_trace[1]);
}

TEST_CASE("training descends on a small set") {
  HdaConfig cfg;
  cfg.neighborhood_side = 11;
  cfg.morph_iterations = 2;
  const auto items = small_items(6, 31, cfg);
  TrainConfig tc;
  tc.learning_rate = 0.5;
  tc.epochs = 40;
  tc.seed = 1;
  const TrainResult r = train(items, tc, cfg);
  REQUIRE(r.loss_trace.size() == 41);
  CHECK(r.loss_trace.back() < r.loss_trace.front());
  for (double v : r.loss_trace) REQUIRE(std::isfinite(v));
}

TEST_CASE("lambda zero makes both modes walk the same trajectory") {
  HdaConfig cfg;
  cfg.neighborhood_side = 7;
  cfg.morph_iterations = 1;
  cfg.lambda = 0.0;
  const auto items = small_items(3, 37, cfg, 16);

  TrainConfig tc;
  tc.learning_rate = 0.3;
  tc.epochs = 12;
  tc.seed = 8;

  TrainConfig hda_mode = tc;
  hda_mode.loss_mode = LossMode::hda;
  TrainConfig plain_mode = tc;
  plain_mode.loss_mode = LossMode::bce_iou;

  const TrainResult a = train(items, hda_mode, cfg);
  const TrainResult b = train(items, plain_mode, cfg);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.model.weights == b.model.weights);
  CHECK(a.model.bias == b.model.bias);
}

TEST_CASE("nonzero lambda separates the trajectories") {
  HdaConfig cfg;
  cfg.neighborhood_side = 7;
  cfg.morph_iterations = 1;
  cfg.lambda = 5.0;
  const auto items = small_items(3, 37, cfg, 16);

  TrainConfig tc;
  tc.learning_rate = 0.3;
  tc.epochs = 6;
  tc.seed = 8;
  TrainConfig hda_mode = tc;
  hda_mode.loss_mode = LossMode::hda;
  TrainConfig plain_mode = tc;
  plain_mode.loss_mode = LossMode::bce_iou;

  const TrainResult a = train(items, hda_mode, cfg);
  const TrainResult b = train(items, plain_mode, cfg);
  CHECK(a.model.weights != b.model.weights);
}

TEST_CASE("training is deterministic in the seed") {
  HdaConfig cfg;
  cfg.neighborhood_side = 5;
  cfg.morph_iterations = 1;
  const auto items = small_items(2, 43, cfg, 16);
  TrainConfig tc;
  tc.epochs = 5;
  tc.seed = 12;
  const TrainResult a = train(items, tc, cfg);
  const TrainResult b = train(items, tc, cfg);
  CHECK(a.model.weights == b.model.weights);
  CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("ablation counts wins across seeds") {
  HdaConfig cfg;
  cfg.neighborhood_side = 11;
  cfg.morph_iterations = 2;
  const auto train_items = small_items(8, 51, cfg);
  const auto test_items = small_items(4, 52, cfg);

  TrainConfig tc;
  tc.learning_rate = 0.5;
  tc.epochs = 30;

  const AblationReport r = ablate(train_items, test_items, tc, cfg, {1, 2});
  REQUIRE(r.rows.size() == 2);
  CHECK(r.comparable == 2);
  CHECK(r.mae_b_wins >= 0);
  CHECK(r.mae_b_wins <= 2);
  for (const auto& row : r.rows) {
    CHECK(row.baseline.count == 4);
    CHECK(row.weighted.count == 4);
  }

  CHECK_THROWS_AS(ablate(train_items, {}, tc, cfg, {1}), ContractError);
  CHECK_THROWS_AS(ablate(train_items, test_items, tc, cfg, {}), ContractError);
}

TEST_CASE("mode names round-trip") {
  CHECK(loss_mode_from_string(to_string(LossMode::hda)) == LossMode::hda);
  CHECK(loss_mode_from_string(to_string(LossMode::bce_iou)) == LossMode::bce_iou);
  CHECK_THROWS_AS(loss_mode_from_string("focal"), ContractError);
}
