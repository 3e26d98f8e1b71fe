#pragma once

// Scoring and experiment harnesses: accuracy, the fraction x seed ablation
// grid, Welch's t-test, and annotator agreement / confusion statistics.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "socorient/corpus.hpp"
#include "socorient/error.hpp"
#include "socorient/features.hpp"
#include "socorient/model.hpp"
#include "socorient/parallel.hpp"
#include "socorient/tagging/cache.hpp"
#include "socorient/tags.hpp"
#include "socorient/text.hpp"

namespace socorient::eval {

inline double accuracy(std::span<const model::OutcomePrediction> preds,
                       std::span<const Outcome> gold) {
  if (preds.size() != gold.size() || preds.empty()) {
    throw Error(Errc::LengthMismatch, "accuracy needs aligned, non-empty lists");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i].label == gold[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

/// Sample (n - 1) variance; 0 for fewer than two values.
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double sample_std(std::span<const double> xs) { return std::sqrt(sample_variance(xs)); }

// --- Welch's t-test ---------------------------------------------------------

namespace detail {

// Continued fraction for the incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

/// Two-sided p for Student's t with `df` degrees of freedom.
inline double t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

struct TTestResult {
  double t = 0.0;
  double p_two_sided = 1.0;
  double df = 0.0;
};

/// Welch unequal-variance t-test. With both variances zero: equal means give
/// t = 0, p = 1; different means give t = +/-inf, p = 0.
inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(Errc::InvalidArgument, "t-test needs at least two values per sample");
  }
  const double ma = mean(a), mb = mean(b);
  const double sa = sample_variance(a) / static_cast<double>(a.size());
  const double sb = sample_variance(b) / static_cast<double>(b.size());
  const double se2 = sa + sb;
  if (se2 == 0.0) {
    if (ma == mb) return {0.0, 1.0, 0.0};
    const double inf = std::numeric_limits<double>::infinity();
    return {ma > mb ? inf : -inf, 0.0, 0.0};
  }
  TTestResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (sa * sa / static_cast<double>(a.size() - 1) +
                      sb * sb / static_cast<double>(b.size() - 1));
  r.p_two_sided = t_two_sided_p(r.t, r.df);
  return r;
}

// --- agreement --------------------------------------------------------------

/// n items x k categories; each row counts how many raters chose each category.
class RatingMatrix {
 public:
  RatingMatrix(std::vector<std::vector<std::size_t>> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw Error(Errc::InvalidArgument, "rating matrix has no items");
    k_ = counts_.front().size();
    for (const auto& row : counts_) {
      if (row.size() != k_) throw Error(Errc::DimensionMismatch, "ragged rating matrix");
      std::size_t r = 0;
      for (auto c : row) r += c;
      if (&row == &counts_.front()) raters_ = r;
      if (r != raters_) throw Error(Errc::InvalidArgument, "items have different rater counts");
    }
    if (raters_ < 2) throw Error(Errc::InvalidArgument, "need at least two raters per item");
  }

  std::size_t items() const { return counts_.size(); }
  std::size_t categories() const { return k_; }
  std::size_t raters() const { return raters_; }
  const std::vector<std::vector<std::size_t>>& counts() const { return counts_; }

 private:
  std::vector<std::vector<std::size_t>> counts_;
  std::size_t k_ = 0;
  std::size_t raters_ = 0;
};

/// One label list per annotator, aligned by utterance; categories are the
/// nine social tags.
inline RatingMatrix rating_matrix(std::span<const std::vector<SocialOrientationTag>> annotators) {
  if (annotators.empty()) throw Error(Errc::InvalidArgument, "no annotators");
  const std::size_t n = annotators.front().size();
  for (const auto& a : annotators) {
    if (a.size() != n) throw Error(Errc::LengthMismatch, "annotators labeled different item counts");
  }
  std::vector<std::vector<std::size_t>> counts(n, std::vector<std::size_t>(kSocialTagCount, 0));
  for (const auto& a : annotators) {
    for (std::size_t i = 0; i < n; ++i) ++counts[i][index_of(a[i])];
  }
  return RatingMatrix(std::move(counts));
}

struct KappaParts {
  double p_bar = 0.0;
  double p_e = 0.0;
  double kappa = 0.0;
};

inline KappaParts fleiss_kappa_parts(const RatingMatrix& m) {
  const double n = static_cast<double>(m.items());
  const double r = static_cast<double>(m.raters());
  std::vector<double> col(m.categories(), 0.0);
  double p_sum = 0.0;
  for (const auto& row : m.counts()) {
    double agree = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double c = static_cast<double>(row[j]);
      agree += c * (c - 1.0);
      col[j] += c;
    }
    p_sum += agree / (r * (r - 1.0));
  }
  KappaParts k;
  k.p_bar = p_sum / n;
  bool single_category = false;
  for (double c : col) {
    const double pj = c / (n * r);
    k.p_e += pj * pj;
    single_category = single_category || c == n * r;
  }
  if (single_category) {
    // Every rating fell in one category: expected agreement is 1.
    if (k.p_bar != 1.0) throw Error(Errc::PerfectExpectedAgreement, "kappa undefined");
    k.p_e = 1.0;
    k.kappa = 1.0;
    return k;
  }
  k.kappa = (k.p_bar - k.p_e) / (1.0 - k.p_e);
  return k;
}

inline double fleiss_kappa(const RatingMatrix& m) { return fleiss_kappa_parts(m).kappa; }

inline double pairwise_agreement(std::span<const SocialOrientationTag> a,
                                 std::span<const SocialOrientationTag> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(Errc::LengthMismatch, "agreement needs aligned, non-empty label lists");
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

/// Rows are gold, columns predicted, both in canonical tag order.
struct ConfusionMatrix {
  std::array<SocialOrientationTag, kSocialTagCount> labels = kSocialTags;
  std::array<std::array<std::size_t, kSocialTagCount>, kSocialTagCount> counts{};

  std::size_t total() const {
    std::size_t s = 0;
    for (const auto& row : counts) {
      for (auto c : row) s += c;
    }
    return s;
  }

  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < kSocialTagCount; ++i) s += counts[i][i];
    return s;
  }

  /// Share of off-diagonal mass that lands on an adjacent circumplex tag.
  double neighbor_error_fraction() const {
    std::size_t errors = 0, neighbors = 0;
    for (std::size_t g = 0; g < kSocialTagCount; ++g) {
      for (std::size_t p = 0; p < kSocialTagCount; ++p) {
        if (g == p) continue;
        errors += counts[g][p];
        if (are_neighbors(labels[g], labels[p])) neighbors += counts[g][p];
      }
    }
    return errors == 0 ? 0.0 : static_cast<double>(neighbors) / static_cast<double>(errors);
  }
};

inline ConfusionMatrix confusion_matrix(std::span<const SocialOrientationTag> gold,
                                        std::span<const SocialOrientationTag> pred) {
  if (gold.size() != pred.size()) throw Error(Errc::LengthMismatch, "gold and predicted differ");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < gold.size(); ++i) ++m.counts[index_of(gold[i])][index_of(pred[i])];
  return m;
}

// --- ablation ---------------------------------------------------------------

struct RunResult {
  double fraction = 1.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct AblationRow {
  double fraction = 1.0;
  std::string method;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::size_t n_runs = 0;
  std::optional<double> p_vs_baseline;
};

struct AblationReport {
  std::string dataset;
  std::vector<AblationRow> rows;
  std::vector<std::pair<std::string, RunResult>> runs;  // (method, run)
};

inline const std::vector<double>& default_fractions() {
  static const std::vector<double> v{0.01, 0.10, 0.2, 0.5, 1.0};
  return v;
}

inline const std::vector<std::uint64_t>& default_seeds() {
  static const std::vector<std::uint64_t> v{42, 43, 44, 45, 46};
  return v;
}

/// Trains on `train` and returns accuracy on `test`.
using Trainer = std::function<double(const Corpus& train, const Corpus& test, std::uint64_t seed)>;

/// Every (fraction, seed) cell subsamples Train with stratified_subset and is
/// scored on the whole Test split. Cells may run in parallel; results are
/// folded in (fraction, seed) order.
inline AblationReport run_ablation(const Corpus& corpus, std::span<const double> fractions,
                                   std::span<const std::uint64_t> seeds, const Trainer& trainer,
                                   const std::string& method, std::size_t workers = 1) {
  if (fractions.empty() || seeds.empty()) {
    throw Error(Errc::InvalidArgument, "ablation needs at least one fraction and one seed");
  }
  const Corpus train = corpus::select_split(corpus, Split::Train);
  const Corpus test = corpus::select_split(corpus, Split::Test);
  if (train.empty() || test.empty()) {
    throw Error(Errc::EmptyCorpus, "ablation needs non-empty Train and Test splits");
  }
  const std::size_t n_cells = fractions.size() * seeds.size();
  auto runs = parallel_map<RunResult>(n_cells, workers, [&](std::size_t cell) {
    const double f = fractions[cell / seeds.size()];
    const std::uint64_t seed = seeds[cell % seeds.size()];
    const Corpus subset = corpus::stratified_subset(train, f, seed);
    RunResult r;
    r.fraction = f;
    r.seed = seed;
    r.accuracy = trainer(subset, test, seed);
    r.n_train = subset.size();
    r.n_test = test.size();
    return r;
  });

  AblationReport report;
  report.dataset = corpus.id();
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    std::vector<double> accs;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const auto& r = runs[fi * seeds.size() + si];
      accs.push_back(r.accuracy);
      report.runs.emplace_back(method, r);
    }
    report.rows.push_back({fractions[fi], method, mean(accs), sample_std(accs), accs.size(), {}});
  }
  return report;
}

/// Per-fraction accuracy samples of one method.
inline std::vector<double> run_accuracies(const AblationReport& report, const std::string& method,
                                          double fraction) {
  std::vector<double> out;
  for (const auto& [m, r] : report.runs) {
    if (m == method && r.fraction == fraction) out.push_back(r.accuracy);
  }
  return out;
}

/// Fills p_vs_baseline for every non-baseline row by a Welch test of its
/// per-seed accuracies against the baseline's at the same fraction.
inline void attach_p_values(AblationReport& report, const std::string& baseline) {
  for (auto& row : report.rows) {
    if (row.method == baseline) continue;
    const auto a = run_accuracies(report, row.method, row.fraction);
    const auto b = run_accuracies(report, baseline, row.fraction);
    if (a.size() >= 2 && b.size() >= 2) row.p_vs_baseline = welch_t_test(a, b).p_two_sided;
  }
}

/// Concatenates reports of several methods over the same dataset.
inline AblationReport merge_reports(std::span<const AblationReport> parts) {
  AblationReport out;
  for (const auto& p : parts) {
    if (out.dataset.empty()) out.dataset = p.dataset;
    out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
    out.runs.insert(out.runs.end(), p.runs.begin(), p.runs.end());
  }
  return out;
}

inline constexpr std::string_view kAblationHeader =
    "dataset,fraction,method,mean_accuracy,std_accuracy,n_runs,p_vs_baseline,significant_at_0.1";

/// p and the marker are left empty for rows without a comparison.
inline std::string ablation_csv(const AblationReport& report) {
  std::string out(kAblationHeader);
  out += '\n';
  for (const auto& r : report.rows) {
    out += text::csv_field(report.dataset) + "," + text::format_double(r.fraction) + "," +
           text::csv_field(r.method) + "," + text::format_fixed(r.mean_accuracy, 6) + "," +
           text::format_fixed(r.std_accuracy, 6) + "," + std::to_string(r.n_runs) + ",";
    if (r.p_vs_baseline) {
      out += text::format_fixed(*r.p_vs_baseline, 6);
      out += *r.p_vs_baseline < 0.1 ? ",*" : ",";
    } else {
      out += ",";
    }
    out += '\n';
  }
  return out;
}

inline std::string runs_csv(const AblationReport& report) {
  std::string out = "dataset,method,fraction,seed,accuracy,n_train,n_test\n";
  for (const auto& [method, r] : report.runs) {
    out += text::csv_field(report.dataset) + "," + text::csv_field(method) + "," +
           text::format_double(r.fraction) + "," + std::to_string(r.seed) + "," +
           text::format_fixed(r.accuracy, 6) + "," + std::to_string(r.n_train) + "," +
           std::to_string(r.n_test) + "\n";
  }
  return out;
}

/// Mean +/- one sample std per (method, fraction), for plotting bands.
inline std::string band_csv(const AblationReport& report) {
  std::string out = "method,fraction,mean_accuracy,lower,upper\n";
  for (const auto& r : report.rows) {
    out += text::csv_field(r.method) + "," + text::format_double(r.fraction) + "," +
           text::format_fixed(r.mean_accuracy, 6) + "," +
           text::format_fixed(r.mean_accuracy - r.std_accuracy, 6) + "," +
           text::format_fixed(r.mean_accuracy + r.std_accuracy, 6) + "\n";
  }
  return out;
}

/// Square table of pairwise agreement rates plus a fleiss_kappa line.
inline std::string agreement_csv(std::span<const std::string> names,
                                 std::span<const std::vector<SocialOrientationTag>> annotators) {
  if (names.size() != annotators.size()) {
    throw Error(Errc::LengthMismatch, "one name per annotator required");
  }
  std::string out = "annotator";
  for (const auto& n : names) out += "," + text::csv_field(n);
  out += '\n';
  for (std::size_t i = 0; i < annotators.size(); ++i) {
    out += text::csv_field(names[i]);
    for (std::size_t j = 0; j < annotators.size(); ++j) {
      out += "," + text::format_fixed(pairwise_agreement(annotators[i], annotators[j]), 4);
    }
    out += '\n';
  }
  out += "fleiss_kappa," + text::format_fixed(fleiss_kappa(rating_matrix(annotators)), 6) + "\n";
  return out;
}

inline std::string confusion_csv(const ConfusionMatrix& m) {
  std::string out = "gold\\predicted";
  for (auto t : m.labels) out += "," + std::string(tag_name(t));
  out += '\n';
  for (std::size_t g = 0; g < kSocialTagCount; ++g) {
    out += tag_name(m.labels[g]);
    for (std::size_t p = 0; p < kSocialTagCount; ++p) out += "," + std::to_string(m.counts[g][p]);
    out += '\n';
  }
  return out;
}

// --- logistic recipe ----------------------------------------------------------

struct TrainingRecipe {
  std::vector<features::FeatureKind> features{features::FeatureKind::SocialCounts};
  model::TrainConfig train;
  bool class_weighted = true;
  double threshold = 0.5;
};

inline model::OutcomeWeights recipe_weights(const Corpus& train, bool class_weighted) {
  if (!class_weighted) return model::unit_outcome_weights();
  return model::class_weights<Outcome>(
      {{Outcome::Success, train.count(Outcome::Success)},
       {Outcome::Failure, train.count(Outcome::Failure)}});
}

/// Fits features and a logistic model on `train`.
inline model::LogisticPredictor fit_logistic(const Corpus& train, const tagging::TagIndex& tags,
                                             const TrainingRecipe& recipe, std::uint64_t seed) {
  features::FeaturePipeline pipeline(recipe.features);
  pipeline.fit(train);
  std::vector<features::FeatureVector> X;
  std::vector<Outcome> y;
  X.reserve(train.size());
  for (const auto& conv : train) {
    X.push_back(pipeline.transform(conv, tags.for_conversation(conv)));
    y.push_back(conv.outcome);
  }
  auto cfg = recipe.train;
  cfg.seed = seed;
  const auto schema = pipeline.schema();
  auto m = model::train_logistic(X, y, recipe_weights(train, recipe.class_weighted), cfg, &schema);
  return model::LogisticPredictor(std::move(m), std::move(pipeline), recipe.threshold);
}

inline std::vector<model::OutcomePrediction> predict_all(const model::OutcomePredictor& predictor,
                                                         const Corpus& corpus,
                                                         const tagging::TagIndex& tags) {
  std::vector<model::OutcomePrediction> out;
  out.reserve(corpus.size());
  for (const auto& conv : corpus) out.push_back(predictor.predict(conv, tags.for_conversation(conv)));
  return out;
}

inline double evaluate(const model::OutcomePredictor& predictor, const Corpus& test,
                       const tagging::TagIndex& tags) {
  std::vector<Outcome> gold;
  for (const auto& c : test) gold.push_back(c.outcome);
  return accuracy(predict_all(predictor, test, tags), gold);
}

inline Trainer logistic_trainer(const tagging::TagIndex& tags, TrainingRecipe recipe) {
  return [&tags, recipe = std::move(recipe)](const Corpus& train, const Corpus& test,
                                              std::uint64_t seed) {
    return evaluate(fit_logistic(train, tags, recipe, seed), test, tags);
  };
}

/// Always predicts the most frequent training outcome (ties go to Failure).
inline Trainer majority_trainer() {
  return [](const Corpus& train, const Corpus& test, std::uint64_t) {
    const Outcome guess = train.count(Outcome::Failure) >= train.count(Outcome::Success)
                              ? Outcome::Failure
                              : Outcome::Success;
    std::size_t hits = 0;
    for (const auto& c : test) hits += c.outcome == guess;
    return static_cast<double>(hits) / static_cast<double>(test.size());
  };
}

}  // namespace socorient::eval
