#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "socorient/model.hpp"
#include "support.hpp"

using namespace socorient;
using namespace socorient::model;
using namespace testing_support;
using features::FeatureVector;

namespace {

struct Toy {
  std::vector<FeatureVector> X;
  std::vector<Outcome> y;
};

Toy random_toy(SeededRng& rng, std::size_t n, std::size_t d) {
  Toy t;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(d);
    for (auto& v : x) v = rng.uniform01() * 2.0 - 1.0;
    t.X.push_back(FeatureVector::dense("toy", x));
    t.y.push_back(i % 3 == 0 ? Outcome::Failure : Outcome::Success);
  }
  return t;
}

OutcomeWeights weights_for(const std::vector<Outcome>& y) {
  std::map<Outcome, std::size_t> counts;
  for (auto o : y) ++counts[o];
  return class_weights(counts);
}

}  // namespace

TEST(ClassWeights, ExampleAndBalanced) {
  const auto w = class_weights<Outcome>({{Outcome::Success, 90}, {Outcome::Failure, 10}});
  EXPECT_EQ(w.weight(Outcome::Success), 0.2);
  EXPECT_EQ(w.weight(Outcome::Failure), 1.8);
  const auto b = class_weights<int>({{0, 7}, {1, 7}, {2, 7}});
  for (int c = 0; c < 3; ++c) EXPECT_EQ(b.weight(c), 1.0);
  EXPECT_EQ(w.n_total, 100u);
  EXPECT_EQ(w.n_classes, 2u);
}

TEST(ClassWeights, SumToClassCount) {
  SeededRng rng(3);
  for (int k = 0; k < 200; ++k) {
    std::map<int, std::size_t> counts;
    const std::size_t c = 2 + rng.uniform_index(8);
    for (std::size_t i = 0; i < c; ++i) counts[static_cast<int>(i)] = 1 + rng.uniform_index(100000);
    const auto w = class_weights(counts);
    double s = 0;
    for (const auto& [cls, v] : w.weights) s += v;
    EXPECT_NEAR(s, static_cast<double>(c), 1e-12);
  }
}

TEST(ClassWeights, EmptyClassIsAnError) {
  try {
    class_weights<int>({{0, 5}, {1, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyClass);
  }
}

TEST(Loss, StableForExtremeLogits) {
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_NEAR(softplus(1000.0), 1000.0, 1e-12);
  EXPECT_NEAR(softplus(-1000.0), 0.0, 1e-300);
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  SeededRng rng(17);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t d = 1 + rng.uniform_index(10);
    const std::size_t n = 2 + rng.uniform_index(49);
    auto toy = random_toy(rng, n, d);
    const auto p = make_problem(toy.X, toy.y, weights_for(toy.y));
    std::vector<double> w(d);
    for (auto& v : w) v = rng.uniform01() * 2.0 - 1.0;
    const double b = rng.uniform01() - 0.5;
    const double l2 = 1e-2;
    std::vector<double> g(d);
    const double gb = weighted_loss_gradient(p, w, b, l2, g);
    const double h = 1e-6;
    for (std::size_t j = 0; j < d; ++j) {
      auto wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd = (weighted_loss(p, wp, b, l2) - weighted_loss(p, wm, b, l2)) / (2 * h);
      EXPECT_LE(std::abs(fd - g[j]) / std::max(1e-8, std::abs(fd) + std::abs(g[j])), 1e-6);
    }
    const double fdb = (weighted_loss(p, w, b + h, l2) - weighted_loss(p, w, b - h, l2)) / (2 * h);
    EXPECT_LE(std::abs(fdb - gb) / std::max(1e-8, std::abs(fdb) + std::abs(gb)), 1e-6);
  }
}

TEST(Train, LossIsMonotoneAndDeterministic) {
  SeededRng rng(1);
  auto toy = random_toy(rng, 40, 4);
  const auto cw = weights_for(toy.y);
  TrainConfig cfg;
  cfg.max_epochs = 300;
  std::vector<double> losses;
  const auto m = train_logistic(toy.X, toy.y, cw, cfg, nullptr,
                                [&](std::size_t, double l) { losses.push_back(l); });
  ASSERT_GT(losses.size(), 2u);
  for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LE(losses[i], losses[i - 1] + 1e-15);
  EXPECT_EQ(m.train_meta.epochs + 1, losses.size());
  EXPECT_EQ(train_logistic(toy.X, toy.y, cw, cfg), m);
}

TEST(Train, SeparableDataIsLearned) {
  std::vector<FeatureVector> X;
  std::vector<Outcome> y;
  for (int i = 0; i < 20; ++i) {
    const double v = i < 10 ? -1.0 - i * 0.1 : 1.0 + i * 0.1;
    X.push_back(FeatureVector::dense("toy", {v}));
    y.push_back(i < 10 ? Outcome::Success : Outcome::Failure);
  }
  TrainConfig cfg;
  cfg.learning_rate = 1.0;
  const auto m = train_logistic(X, y, weights_for(y), cfg);
  for (std::size_t i = 0; i < X.size(); ++i) EXPECT_EQ(predict(m, X[i]).label, y[i]);
}

TEST(Train, ErrorsOnDegenerateInput) {
  std::vector<FeatureVector> X{FeatureVector::dense("toy", {1.0}), FeatureVector::dense("toy", {2.0})};
  std::vector<Outcome> one_class{Outcome::Failure, Outcome::Failure};
  try {
    train_logistic(X, one_class, unit_outcome_weights(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingleClass);
  }
  std::vector<Outcome> y{Outcome::Failure, Outcome::Success};
  std::vector<FeatureVector> ragged{FeatureVector::dense("toy", {1.0}),
                                    FeatureVector::dense("toy", {1.0, 2.0})};
  try {
    train_logistic(ragged, y, unit_outcome_weights(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
  std::vector<FeatureVector> huge{FeatureVector::dense("toy", {1e200}),
                                  FeatureVector::dense("toy", {-1e200})};
  TrainConfig cfg;
  cfg.l2_penalty = 0.0;
  try {
    train_logistic(huge, y, unit_outcome_weights(), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DivergenceDetected);
  }
}

TEST(Predict, ThresholdTieGoesToFailure) {
  EXPECT_EQ(label_for(0.5), Outcome::Failure);
  EXPECT_EQ(label_for(0.4999), Outcome::Success);
  EXPECT_EQ(label_for(0.7, 0.8), Outcome::Success);
  LogisticModel m;
  m.schema_id = "toy";
  m.weights = {0.0};
  EXPECT_EQ(predict(m, FeatureVector::dense("toy", {3.0})).label, Outcome::Failure);
  EXPECT_THROW(predict_proba(m, FeatureVector::dense("other", {3.0})), Error);
  EXPECT_THROW(predict_proba(m, FeatureVector::dense("toy", {3.0, 1.0})), Error);
}

TEST(Persist, ModelRoundTripIsExact) {
  LogisticModel m;
  m.schema_id = "social_counts";
  m.names = {"a", "b,c"};
  m.weights = {0.1 + 0.2, -1e-300};
  m.bias = 1.0 / 3.0;
  m.train_meta = {42, 17, 0.123456789012345678};
  const auto text = serialize_model(m);
  EXPECT_EQ(text.substr(0, text.find('\n')), "socorient-logistic-model,1");
  EXPECT_EQ(parse_model(text), m);
  EXPECT_THROW(parse_model(text, std::string("tfidf")), Error);
  try {
    parse_model(text.substr(0, text.size() - 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CorruptModel);
  }
  EXPECT_THROW(parse_model("garbage\n"), Error);
}

TEST(Predictors, LogisticPredictorUsesPipeline) {
  LogisticModel m;
  m.schema_id = "social_counts";
  m.weights.assign(9, 0.0);
  m.weights[index_of(SocialOrientationTag::Cold)] = 10.0;
  m.bias = -5.0;
  LogisticPredictor pred(m, features::FeaturePipeline({features::FeatureKind::SocialCounts}));
  const auto c = conv("c", {utt("1", "a", "x"), utt("2", "b", "y")});
  EXPECT_EQ(pred.predict(c, std::vector{tag("1", SocialOrientationTag::Cold),
                                        tag("2", SocialOrientationTag::Cold)})
                .label,
            Outcome::Failure);
  EXPECT_EQ(pred.predict(c, std::vector{tag("1", SocialOrientationTag::WarmAgreeable),
                                        tag("2", SocialOrientationTag::Cold)})
                .label,
            Outcome::Failure);  // exactly 0.5
  EXPECT_EQ(pred.predict(c, std::vector{tag("1", SocialOrientationTag::WarmAgreeable),
                                        tag("2", SocialOrientationTag::WarmAgreeable)})
                .label,
            Outcome::Success);
}

TEST(Predictors, RemotePredictorProtocol) {
  double reply = 0.7;
  std::string seen_text;
  MockServer server("/predict", [&](const httplib::Request& req, httplib::Response& res) {
    seen_text = nlohmann::json::parse(req.body)["rendered_text"];
    res.set_content(nlohmann::json{{"probability_failure", reply}}.dump(), "application/json");
  });
  RemotePredictor pred(server.url("/predict"));
  const auto c = conv("c", {utt("1", "Ann", "hi")});
  const std::vector tags{tag("1", SocialOrientationTag::Cold)};
  const auto r = pred.predict(c, tags);
  EXPECT_EQ(r.label, Outcome::Failure);
  EXPECT_DOUBLE_EQ(r.probability_failure, 0.7);
  EXPECT_EQ(seen_text, "Ann (Cold): hi");
  reply = 1.2;
  try {
    pred.predict(c, tags);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ProtocolError);
  }
  RemotePredictor dead("http://127.0.0.1:" + std::to_string(dead_port()) + "/predict");
  try {
    dead.predict(c, tags);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TransportError);
  }
}
