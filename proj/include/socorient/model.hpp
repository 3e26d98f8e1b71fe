#pragma once

// Binary logistic regression for conversation outcomes, trained by plain
// full-batch gradient descent on class-weighted cross-entropy.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "socorient/corpus.hpp"
#include "socorient/error.hpp"
#include "socorient/features.hpp"
#include "socorient/http.hpp"
#include "socorient/tags.hpp"
#include "socorient/text.hpp"

namespace socorient::model {

using features::FeatureSchema;
using features::FeatureVector;

template <class Class>
struct ClassWeights {
  std::map<Class, double> weights;  // w'_c
  std::size_t n_total = 0;          // N
  std::map<Class, std::size_t> per_class;
  std::size_t n_classes = 0;  // C

  double weight(Class c) const {
    auto it = weights.find(c);
    if (it == weights.end()) throw Error(Errc::EmptyClass, "no weight for class");
    return it->second;
  }
};

/// w'_c = C * (N / N_c) / sum_k (N / N_k).
///
/// N cancels, so the weight equals C * prod_{k != c} N_k / sum_j prod_{k != j} N_k.
/// That form is evaluated in exact integer arithmetic when it fits, which
/// makes e.g. {90, 10} give exactly 0.2 and 1.8.
template <class Class>
ClassWeights<Class> class_weights(const std::map<Class, std::size_t>& counts) {
  if (counts.empty()) throw Error(Errc::EmptyClass, "no classes");
  ClassWeights<Class> cw;
  cw.per_class = counts;
  cw.n_classes = counts.size();
  for (const auto& [c, n] : counts) {
    if (n == 0) throw Error(Errc::EmptyClass, "class with zero examples");
    cw.n_total += n;
  }
  const std::size_t C = cw.n_classes;

  using u128 = unsigned __int128;
  std::vector<u128> others;  // prod_{k != c} N_k, in map order
  bool exact = true;
  for (auto i = counts.begin(); exact && i != counts.end(); ++i) {
    u128 p = 1;
    for (auto j = counts.begin(); j != counts.end(); ++j) {
      if (i == j) continue;
      if (__builtin_mul_overflow(p, static_cast<u128>(j->second), &p)) {
        exact = false;
        break;
      }
    }
    others.push_back(p);
  }
  u128 denom = 0;
  for (auto p : others) {
    if (!exact || __builtin_add_overflow(denom, p, &denom)) exact = false;
  }
  constexpr u128 kExactDouble = u128{1} << 53;
  if (exact) {
    std::size_t k = 0;
    for (const auto& [c, n] : counts) {
      u128 num = 0;
      if (__builtin_mul_overflow(others[k++], static_cast<u128>(C), &num) ||
          num > kExactDouble || denom > kExactDouble) {
        exact = false;
        break;
      }
      cw.weights[c] = static_cast<double>(num) / static_cast<double>(denom);
    }
  }
  if (!exact) {
    cw.weights.clear();
    const double N = static_cast<double>(cw.n_total);
    double sum = 0.0;
    for (const auto& [c, n] : counts) sum += N / static_cast<double>(n);
    for (const auto& [c, n] : counts) {
      cw.weights[c] = static_cast<double>(C) * (N / static_cast<double>(n)) / sum;
    }
  }
  return cw;
}

using OutcomeWeights = ClassWeights<Outcome>;

inline OutcomeWeights unit_outcome_weights() {
  return class_weights<Outcome>({{Outcome::Success, 1}, {Outcome::Failure, 1}});
}

struct TrainMeta {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double final_loss = 0.0;

  friend bool operator==(const TrainMeta&, const TrainMeta&) = default;
};

struct LogisticModel {
  std::string schema_id;
  std::vector<std::string> names;
  std::vector<double> weights;
  double bias = 0.0;
  Outcome positive_class = Outcome::Failure;
  TrainMeta train_meta;

  std::size_t dim() const { return weights.size(); }

  friend bool operator==(const LogisticModel&, const LogisticModel&) = default;
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t max_epochs = 2000;
  double l2_penalty = 1e-4;  // bias is not penalized
  double tolerance = 1e-7;   // on the loss change between epochs
  std::uint64_t seed = 42;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw Error(Errc::InvalidArgument, "learning_rate must be positive");
    }
    if (!(l2_penalty >= 0.0)) throw Error(Errc::InvalidArgument, "l2_penalty must be >= 0");
    if (!(tolerance > 0.0)) throw Error(Errc::InvalidArgument, "tolerance must be positive");
  }
};

struct OutcomePrediction {
  std::string conversation_id;
  double probability_failure = 0.5;
  Outcome label = Outcome::Failure;
};

/// σ(z) without overflow for large |z|.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + e^z), stable for large |z|.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// Per-example data for the loss: features, 0/1 targets (1 = Failure) and
/// per-example weights w'_{y_i}.
struct WeightedProblem {
  std::span<const FeatureVector> X;
  std::vector<double> y;
  std::vector<double> c;
  double c_sum = 0.0;
  std::size_t dim = 0;
};

inline WeightedProblem make_problem(std::span<const FeatureVector> X, std::span<const Outcome> y,
                                    const OutcomeWeights& cw) {
  if (X.size() != y.size()) {
    throw Error(Errc::DimensionMismatch, "feature rows and labels differ in count");
  }
  if (X.empty()) throw Error(Errc::SingleClass, "no training examples");
  WeightedProblem p;
  p.X = X;
  p.dim = X.front().dim();
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].dim() != p.dim || X[i].schema_id() != X.front().schema_id()) {
      throw Error(Errc::DimensionMismatch, "training rows have inconsistent schemas");
    }
    if (y[i] == Outcome::Unlabeled) {
      throw Error(Errc::InvalidArgument, "unlabeled conversation in training data");
    }
    const bool fail = y[i] == Outcome::Failure;
    pos = pos || fail;
    neg = neg || !fail;
    p.y.push_back(fail ? 1.0 : 0.0);
    p.c.push_back(cw.weight(y[i]));
    p.c_sum += p.c.back();
  }
  if (!pos || !neg) throw Error(Errc::SingleClass, "training data contains a single class");
  return p;
}

/// sum_i c_i * BCE_i / sum_i c_i + (l2/2) * |w|^2
inline double weighted_loss(const WeightedProblem& p, std::span<const double> w, double b,
                            double l2) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.X.size(); ++i) {
    const double z = p.X[i].dot(w) + b;
    s += p.c[i] * (softplus(z) - p.y[i] * z);
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return s / p.c_sum + 0.5 * l2 * reg;
}

/// Gradient of weighted_loss; returns the bias component, fills grad_w.
inline double weighted_loss_gradient(const WeightedProblem& p, std::span<const double> w, double b,
                                     double l2, std::span<double> grad_w) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  double grad_b = 0.0;
  for (std::size_t i = 0; i < p.X.size(); ++i) {
    const double r = p.c[i] * (sigmoid(p.X[i].dot(w) + b) - p.y[i]) / p.c_sum;
    p.X[i].axpy(r, grad_w);
    grad_b += r;
  }
  for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += l2 * w[j];
  return grad_b;
}

using EpochObserver = std::function<void(std::size_t epoch, double loss)>;

/// Deterministic: zero init, full batch, fixed step. The observer sees the
/// loss before any update (epoch 0) and after every epoch.
inline LogisticModel train_logistic(std::span<const FeatureVector> X, std::span<const Outcome> y,
                                    const OutcomeWeights& cw, const TrainConfig& cfg,
                                    const FeatureSchema* schema = nullptr,
                                    const EpochObserver& observe = {}) {
  cfg.validate();
  const auto p = make_problem(X, y, cw);
  if (schema && (schema->dimension() != p.dim || schema->schema_id != X.front().schema_id())) {
    throw Error(Errc::DimensionMismatch, "schema does not match training rows");
  }
  LogisticModel m;
  m.schema_id = X.front().schema_id();
  if (schema) m.names = schema->names;
  m.weights.assign(p.dim, 0.0);
  m.train_meta.seed = cfg.seed;

  std::vector<double> grad(p.dim, 0.0);
  double loss = weighted_loss(p, m.weights, m.bias, cfg.l2_penalty);
  if (observe) observe(0, loss);
  std::size_t epoch = 0;
  while (epoch < cfg.max_epochs) {
    const double gb = weighted_loss_gradient(p, m.weights, m.bias, cfg.l2_penalty, grad);
    for (std::size_t j = 0; j < p.dim; ++j) m.weights[j] -= cfg.learning_rate * grad[j];
    m.bias -= cfg.learning_rate * gb;
    ++epoch;
    const double next = weighted_loss(p, m.weights, m.bias, cfg.l2_penalty);
    if (!std::isfinite(next)) {
      throw Error(Errc::DivergenceDetected,
                  "loss became non-finite at epoch " + std::to_string(epoch));
    }
    if (observe) observe(epoch, next);
    const double delta = std::abs(loss - next);
    loss = next;
    if (delta < cfg.tolerance) break;
  }
  m.train_meta.epochs = epoch;
  m.train_meta.final_loss = loss;
  if (m.names.empty()) {
    for (std::size_t j = 0; j < p.dim; ++j) m.names.push_back("f" + std::to_string(j));
  }
  return m;
}

inline double predict_proba(const LogisticModel& m, const FeatureVector& x) {
  if (x.dim() != m.dim() || x.schema_id() != m.schema_id) {
    throw Error(Errc::DimensionMismatch, "feature vector schema '" + x.schema_id() +
                                             "' does not match model schema '" + m.schema_id +
                                             "'");
  }
  return sigmoid(x.dot(m.weights) + m.bias);
}

/// Failure iff p >= threshold, so an exact tie goes to Failure.
inline Outcome label_for(double probability_failure, double threshold = 0.5) {
  return probability_failure >= threshold ? Outcome::Failure : Outcome::Success;
}

inline OutcomePrediction predict(const LogisticModel& m, const FeatureVector& x,
                                 double threshold = 0.5, std::string conversation_id = {}) {
  const double p = predict_proba(m, x);
  return {std::move(conversation_id), p, label_for(p, threshold)};
}

// Model file: header line, then key,value lines, then one name,weight per feature.
inline constexpr std::string_view kModelHeader = "socorient-logistic-model,1";

inline std::string serialize_model(const LogisticModel& m) {
  std::string out(kModelHeader);
  out += '\n';
  out += "schema_id," + text::csv_field(m.schema_id) + "\n";
  out += "positive_class," + std::string(outcome_name(m.positive_class)) + "\n";
  out += "seed," + std::to_string(m.train_meta.seed) + "\n";
  out += "epochs," + std::to_string(m.train_meta.epochs) + "\n";
  out += "final_loss," + text::format_double(m.train_meta.final_loss) + "\n";
  out += "dimension," + std::to_string(m.dim()) + "\n";
  out += "bias," + text::format_double(m.bias) + "\n";
  for (std::size_t j = 0; j < m.dim(); ++j) {
    out += text::csv_field(m.names.at(j)) + "," + text::format_double(m.weights[j]) + "\n";
  }
  return out;
}

namespace detail {

inline std::string unquote_csv(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::string(s);
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    out.push_back(s[i]);
    if (s[i] == '"') ++i;
  }
  return out;
}

}  // namespace detail

inline LogisticModel parse_model(std::string_view contents,
                                 std::optional<std::string_view> expected_schema = std::nullopt) {
  auto corrupt = [](const std::string& what) { return Error(Errc::CorruptModel, what); };
  auto lines = text::split(contents, '\n');
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0] != kModelHeader) throw corrupt("missing model header");

  auto field = [&](std::size_t i, std::string_view key) -> std::string {
    if (i >= lines.size()) throw corrupt("model file truncated before '" + std::string(key) + "'");
    const auto& l = lines[i];
    if (l.rfind(std::string(key) + ",", 0) != 0) {
      throw corrupt("line " + std::to_string(i + 1) + ": expected '" + std::string(key) + "'");
    }
    return l.substr(key.size() + 1);
  };
  LogisticModel m;
  m.schema_id = detail::unquote_csv(field(1, "schema_id"));
  auto pc = outcome_from_name(field(2, "positive_class"));
  if (!pc || *pc != Outcome::Failure) throw corrupt("positive_class must be failure");
  m.positive_class = *pc;
  std::size_t dim = 0;
  if (!text::parse_int(field(3, "seed"), m.train_meta.seed) ||
      !text::parse_int(field(4, "epochs"), m.train_meta.epochs) ||
      !text::parse_double(field(5, "final_loss"), m.train_meta.final_loss) ||
      !text::parse_int(field(6, "dimension"), dim) ||
      !text::parse_double(field(7, "bias"), m.bias)) {
    throw corrupt("bad numeric field in model header");
  }
  if (lines.size() != 8 + dim) throw corrupt("weight count does not match dimension");
  for (std::size_t i = 8; i < lines.size(); ++i) {
    const auto& l = lines[i];
    const auto comma = l.rfind(',');
    double w = 0.0;
    if (comma == std::string::npos || !text::parse_double(std::string_view(l).substr(comma + 1), w)) {
      throw corrupt("line " + std::to_string(i + 1) + ": expected name,weight");
    }
    m.names.push_back(detail::unquote_csv(std::string_view(l).substr(0, comma)));
    m.weights.push_back(w);
  }
  if (!std::isfinite(m.bias)) throw corrupt("non-finite bias");
  for (double w : m.weights) {
    if (!std::isfinite(w)) throw corrupt("non-finite weight");
  }
  if (expected_schema && *expected_schema != m.schema_id) {
    throw corrupt("model schema '" + m.schema_id + "' does not match expected '" +
                  std::string(*expected_schema) + "'");
  }
  return m;
}

inline void save_model(const LogisticModel& m, const std::string& path) {
  text::write_file_atomic(path, serialize_model(m));
}

inline LogisticModel load_model(const std::string& path,
                                std::optional<std::string_view> expected_schema = std::nullopt) {
  return parse_model(text::read_file(path), expected_schema);
}

/// Anything that maps a tagged conversation to a failure probability.
class OutcomePredictor {
 public:
  virtual ~OutcomePredictor() = default;
  virtual OutcomePrediction predict(const Conversation& conv,
                                    std::span<const TagAssignment> tags) const = 0;
  /// False if concurrent predict() calls are unsafe.
  virtual bool reentrant() const { return true; }
  virtual std::string name() const = 0;
};

/// Logistic model over a fitted feature pipeline.
class LogisticPredictor final : public OutcomePredictor {
 public:
  LogisticPredictor(LogisticModel model, features::FeaturePipeline pipeline,
                    double threshold = 0.5)
      : model_(std::move(model)), pipeline_(std::move(pipeline)), threshold_(threshold) {}

  OutcomePrediction predict(const Conversation& conv,
                            std::span<const TagAssignment> tags) const override {
    return model::predict(model_, pipeline_.transform(conv, tags), threshold_, conv.id);
  }

  std::string name() const override { return "logistic:" + model_.schema_id; }
  const LogisticModel& model() const { return model_; }

 private:
  LogisticModel model_;
  features::FeaturePipeline pipeline_;
  double threshold_;
};

// Predictor protocol: {"conversation_id", "rendered_text"} -> {"probability_failure"}.
inline nlohmann::json make_predict_request(const Conversation& conv,
                                           std::span<const TagAssignment> tags) {
  return {{"conversation_id", conv.id},
          {"rendered_text", features::render_prepend_text(conv, tags)}};
}

inline double parse_predict_response(const nlohmann::json& response) {
  if (!response.is_object()) throw Error(Errc::ProtocolError, "response is not an object");
  auto it = response.find("probability_failure");
  if (it == response.end() || !it->is_number()) {
    throw Error(Errc::ProtocolError, "response lacks numeric 'probability_failure'");
  }
  const double p = it->get<double>();
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(Errc::ProtocolError, "probability_failure " + text::format_double(p) +
                                         " outside [0, 1]");
  }
  return p;
}

inline OutcomePrediction predictor_remote(const http::Endpoint& ep, const Conversation& conv,
                                          std::span<const TagAssignment> tags,
                                          const http::ClientOptions& opts = {},
                                          double threshold = 0.5) {
  const double p = parse_predict_response(http::post_json(ep, make_predict_request(conv, tags), opts));
  return {conv.id, p, label_for(p, threshold)};
}

/// Neural predictor served elsewhere, fed the prepend text format.
class RemotePredictor final : public OutcomePredictor {
 public:
  explicit RemotePredictor(const std::string& endpoint, http::ClientOptions opts = {},
                           double threshold = 0.5)
      : url_(endpoint), ep_(http::parse_endpoint(endpoint)), opts_(std::move(opts)),
        threshold_(threshold) {}

  OutcomePrediction predict(const Conversation& conv,
                            std::span<const TagAssignment> tags) const override {
    return predictor_remote(ep_, conv, tags, opts_, threshold_);
  }

  std::string name() const override { return "remote:" + url_; }

 private:
  std::string url_;
  http::Endpoint ep_;
  http::ClientOptions opts_;
  double threshold_;
};

}  // namespace socorient::model
