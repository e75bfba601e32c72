#include <gtest/gtest.h>

#include <cmath>

#include "fmbeam/baselines.hpp"
#include "fmbeam/errors.hpp"
#include "fmbeam/flow.hpp"
#include "gradient_suite.hpp"

using namespace fmbeam;
using namespace fmbeam::testing;

namespace {

void zero_head(RecurrentPredictor& model) {
  auto& ps = model.params();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].name.find(".head.") != std::string::npos) ps[i].value.fill(0.0);
  }
}

}  // namespace

TEST(Baselines, ParameterCountsNearReferenceBudget) {
  RecurrentConfig rnn;
  rnn.cell = CellType::elman;
  RecurrentPredictor r(rnn, config_a(), 1);
  RecurrentPredictor l(RecurrentConfig{}, config_a(), 1);
  // Elman: input (36 x H + H), recurrent H x H, head H x 32 + 32.
  const std::size_t h = rnn.hidden_size();
  EXPECT_EQ(r.param_count(), 36 * h + h + h * h + h * 32 + 32);
  const std::size_t g = RecurrentConfig{}.hidden_size();
  EXPECT_EQ(l.param_count(), 36 * 4 * g + 4 * g + g * 4 * g + g * 32 + 32);
  EXPECT_GE(r.param_count(), 29505u / 2);
  EXPECT_LE(r.param_count(), 29505u * 2);
  EXPECT_GE(l.param_count(), 104385u / 2);
  EXPECT_LE(l.param_count(), 104385u * 2);
  EXPECT_EQ(r.kind(), "rnn");
  EXPECT_EQ(l.kind(), "lstm");
}

TEST(Baselines, OutputShapesAndDistributions) {
  Rng rng(1);
  for (auto window : {config_a(), config_b()}) {
    for (auto decode : {DecodeMode::autoregressive, DecodeMode::direct}) {
      RecurrentConfig cfg;
      cfg.hidden = 12;
      cfg.decode = decode;
      RecurrentPredictor model(cfg, window, 2);
      const Batch batch = random_batch(3, window.hist, window.pred, 32, rng);
      const auto probs = model.predict(batch);
      ASSERT_EQ(probs.size(), window.pred);
      for (const auto& p : probs) {
        ASSERT_EQ(p.rows(), 3u);
        ASSERT_EQ(p.cols(), 32u);
        for (std::size_t r = 0; r < 3; ++r) {
          double s = 0.0;
          for (double x : p.row_span(r)) s += x;
          EXPECT_NEAR(s, 1.0, 1e-12);
        }
      }
    }
  }
}

TEST(Baselines, ZeroHeadPredictsUniform) {
  Rng rng(2);
  for (auto cell : {CellType::elman, CellType::lstm}) {
    RecurrentConfig cfg;
    cfg.cell = cell;
    cfg.hidden = 10;
    RecurrentPredictor model(cfg, config_a(), 3);
    zero_head(model);
    const Batch batch = random_batch(2, 8, 5, 32, rng);
    for (const auto& p : model.predict(batch)) {
      for (double x : p.values()) EXPECT_NEAR(x, 1.0 / 32.0, 1e-15);
    }
    Tape tape(&model.params());
    Rng lr(1);
    const LossTerms terms = model.loss(tape, batch, lr);
    EXPECT_NEAR(terms.values.ce, std::log(32.0), 1e-12);
    EXPECT_EQ(terms.values.fm, 0.0);
    EXPECT_EQ(terms.values.term, 0.0);
    EXPECT_EQ(terms.values.total, terms.values.ce);
  }
}

TEST(Baselines, PredictionsFeedBack) {
  // Autoregressive steps see the previous prediction, so later steps differ
  // from the first even though no new boxes arrive.
  RecurrentConfig cfg;
  cfg.hidden = 16;
  RecurrentPredictor model(cfg, config_b(), 4);
  Rng rng(3);
  jitter(model.params(), rng);
  const auto probs = model.predict(random_batch(1, 3, 10, 32, rng));
  EXPECT_FALSE(probs[0] == probs[1]);
}

TEST(Baselines, MatchesPerSampleInference) {
  RecurrentConfig cfg;
  cfg.hidden = 9;
  RecurrentPredictor model(cfg, config_a(), 5);
  Rng rng(4);
  const Batch batch = random_batch(4, 8, 5, 32, rng);
  const auto all = model.predict(batch);
  for (std::size_t b = 0; b < 4; ++b) {
    Tensor hist = Tensor::zeros(8, 4);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t k = 0; k < 4; ++k) hist(i, k) = batch.boxes(b * 8 + i, k);
    }
    const Inference one = infer(model, hist);
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t m = 0; m < 32; ++m) EXPECT_NEAR(one.probs(t, m), all[t](b, m), 1e-12);
    }
  }
}

TEST(Baselines, JsonAndErrors) {
  RecurrentConfig cfg;
  cfg.cell = CellType::elman;
  cfg.hidden = 7;
  cfg.decode = DecodeMode::direct;
  const auto j = to_json(cfg);
  EXPECT_EQ(to_json(recurrent_config_from_json(j)), j);
  auto bad = j;
  bad["layers"] = 2;
  EXPECT_THROW(recurrent_config_from_json(bad), ConfigError);
  RecurrentConfig one_beam;
  one_beam.beams = 1;
  EXPECT_THROW(one_beam.validate(), ConfigError);

  RecurrentPredictor model(RecurrentConfig{}, config_a(), 1);
  Rng rng(5);
  EXPECT_THROW(model.predict(random_batch(2, 3, 10, 32, rng)), ShapeError);

  const auto path = std::filesystem::temp_directory_path() / "fmbeam_unit_lstm.ckpt";
  save_predictor(path, model);
  auto back = load_predictor(path);
  EXPECT_EQ(back->kind(), "lstm");
  const Batch batch = random_batch(2, 8, 5, 32, rng);
  EXPECT_EQ(back->predict(batch), model.predict(batch));
}
