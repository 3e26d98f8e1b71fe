#pragma once

// Conversation -> feature vector encoders: normalized tag counts, sentiment
// counts, TF-IDF over conversation text, and the prepend text format that
// external neural predictors read.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "socorient/corpus.hpp"
#include "socorient/error.hpp"
#include "socorient/tagging/lexicon.hpp"
#include "socorient/tags.hpp"
#include "socorient/text.hpp"

namespace socorient::features {

struct FeatureSchema {
  std::string schema_id;
  std::vector<std::string> names;

  std::size_t dimension() const { return names.size(); }
};

/// Dense or sparse real vector stamped with its schema. Sparse indices are
/// strictly increasing.
class FeatureVector {
 public:
  FeatureVector() = default;

  static FeatureVector dense(std::string schema_id, std::vector<double> values) {
    FeatureVector v;
    v.schema_id_ = std::move(schema_id);
    v.dim_ = values.size();
    v.values_ = std::move(values);
    return v;
  }

  static FeatureVector sparse(std::string schema_id, std::size_t dim,
                              std::vector<std::pair<std::uint32_t, double>> entries) {
    std::sort(entries.begin(), entries.end());
    FeatureVector v;
    v.schema_id_ = std::move(schema_id);
    v.dim_ = dim;
    v.sparse_ = true;
    for (const auto& [i, x] : entries) {
      if (i >= dim) throw Error(Errc::DimensionMismatch, "sparse index out of range");
      if (!v.indices_.empty() && v.indices_.back() == i) {
        throw Error(Errc::InvalidArgument, "duplicate sparse index");
      }
      v.indices_.push_back(i);
      v.values_.push_back(x);
    }
    return v;
  }

  const std::string& schema_id() const { return schema_id_; }
  std::size_t dim() const { return dim_; }
  bool is_sparse() const { return sparse_; }

  double at(std::size_t i) const {
    if (!sparse_) return values_.at(i);
    auto it = std::lower_bound(indices_.begin(), indices_.end(), i);
    return it != indices_.end() && *it == i ? values_[it - indices_.begin()] : 0.0;
  }

  std::vector<double> to_dense() const {
    if (!sparse_) return values_;
    std::vector<double> out(dim_, 0.0);
    for (std::size_t k = 0; k < indices_.size(); ++k) out[indices_[k]] = values_[k];
    return out;
  }

  /// Calls f(index, value) for every stored entry.
  template <class F>
  void for_each(F&& f) const {
    if (sparse_) {
      for (std::size_t k = 0; k < indices_.size(); ++k) f(std::size_t{indices_[k]}, values_[k]);
    } else {
      for (std::size_t i = 0; i < values_.size(); ++i) f(i, values_[i]);
    }
  }

  double dot(std::span<const double> w) const {
    if (w.size() != dim_) throw Error(Errc::DimensionMismatch, "dot: dimension mismatch");
    double s = 0.0;
    for_each([&](std::size_t i, double x) { s += w[i] * x; });
    return s;
  }

  /// out += a * this
  void axpy(double a, std::span<double> out) const {
    if (out.size() != dim_) throw Error(Errc::DimensionMismatch, "axpy: dimension mismatch");
    for_each([&](std::size_t i, double x) { out[i] += a * x; });
  }

  double norm() const {
    double s = 0.0;
    for (double x : values_) s += x * x;
    return std::sqrt(s);
  }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
  }

  friend bool operator==(const FeatureVector& a, const FeatureVector& b) {
    return a.schema_id_ == b.schema_id_ && a.dim_ == b.dim_ && a.to_dense() == b.to_dense();
  }

 private:
  std::string schema_id_;
  std::size_t dim_ = 0;
  bool sparse_ = false;
  std::vector<std::uint32_t> indices_;
  std::vector<double> values_;
};

inline constexpr std::string_view kSocialSchema = "social_counts";
inline constexpr std::string_view kSentimentSchema = "sentiment_counts";
inline constexpr std::string_view kTfidfSchema = "tfidf";

inline FeatureSchema social_count_schema() {
  FeatureSchema s{std::string(kSocialSchema), {}};
  for (auto t : kSocialTags) s.names.push_back("social:" + std::string(tag_name(t)));
  return s;
}

inline FeatureSchema sentiment_count_schema() {
  FeatureSchema s{std::string(kSentimentSchema), {}};
  for (auto t : kSentimentTags) s.names.push_back("sentiment:" + std::string(sentiment_name(t)));
  return s;
}

/// Tag frequencies in canonical order divided by the utterance count.
inline FeatureVector social_count_features(std::span<const TagAssignment> tags) {
  if (tags.empty()) throw Error(Errc::EmptyConversation, "no utterances to count");
  std::vector<double> counts(kSocialTagCount, 0.0);
  for (const auto& a : tags) counts[index_of(a.tag)] += 1.0;
  const double n = static_cast<double>(tags.size());
  for (double& c : counts) c /= n;
  return FeatureVector::dense(std::string(kSocialSchema), std::move(counts));
}

inline FeatureVector sentiment_count_features(std::span<const SentimentTag> tags) {
  if (tags.empty()) throw Error(Errc::EmptyConversation, "no utterances to count");
  std::vector<double> counts(kSentimentTagCount, 0.0);
  for (auto t : tags) counts[static_cast<std::size_t>(t)] += 1.0;
  const double n = static_cast<double>(tags.size());
  for (double& c : counts) c /= n;
  return FeatureVector::dense(std::string(kSentimentSchema), std::move(counts));
}

struct TokenizerConfig {
  std::size_t min_df = 1;  // terms seen in fewer documents are dropped
};

struct TermStats {
  std::uint32_t index = 0;
  std::size_t df = 0;
};

/// Terms are indexed in lexicographic (byte) order.
struct TfidfVocab {
  std::map<std::string, TermStats, std::less<>> terms;
  std::size_t n_docs = 0;

  std::size_t size() const { return terms.size(); }

  double idf(std::size_t df) const {
    return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
  }

  FeatureSchema schema() const {
    FeatureSchema s{std::string(kTfidfSchema), std::vector<std::string>(terms.size())};
    for (const auto& [term, st] : terms) s.names[st.index] = "tfidf:" + term;
    return s;
  }
};

/// Every utterance's tokens, in order, as one document.
inline std::vector<std::string> conversation_tokens(const Conversation& conv) {
  std::vector<std::string> out;
  for (const auto& u : conv.utterances) {
    auto toks = text::tokenize(u.text);
    out.insert(out.end(), std::make_move_iterator(toks.begin()),
               std::make_move_iterator(toks.end()));
  }
  return out;
}

inline TfidfVocab fit_tfidf(const Corpus& corpus, const TokenizerConfig& cfg = {}) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "cannot fit TF-IDF on an empty corpus");
  std::map<std::string, std::size_t, std::less<>> df;
  for (const auto& conv : corpus) {
    auto toks = conversation_tokens(conv);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& t : toks) ++df[std::move(t)];
  }
  TfidfVocab vocab;
  vocab.n_docs = corpus.size();
  std::uint32_t next = 0;
  for (auto& [term, n] : df) {
    if (n < cfg.min_df) continue;
    vocab.terms.emplace(term, TermStats{next++, n});
  }
  return vocab;
}

/// Raw term count times smoothed idf, L2-normalized. Unknown tokens are skipped.
inline FeatureVector transform_tfidf(const Conversation& conv, const TfidfVocab& vocab) {
  std::unordered_map<std::uint32_t, double> tf;
  for (const auto& tok : conversation_tokens(conv)) {
    auto it = vocab.terms.find(tok);
    if (it != vocab.terms.end()) tf[it->second.index] += 1.0;
  }
  std::vector<std::pair<std::uint32_t, double>> entries;
  entries.reserve(tf.size());
  double norm2 = 0.0;
  for (const auto& [term, st] : vocab.terms) {
    auto it = tf.find(st.index);
    if (it == tf.end()) continue;
    const double w = it->second * vocab.idf(st.df);
    entries.emplace_back(st.index, w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& e : entries) e.second *= inv;
  }
  return FeatureVector::sparse(std::string(kTfidfSchema), vocab.size(), std::move(entries));
}

// Vocab file: "n_docs,<N>" then one "term,index,df" line per term.
inline std::string serialize_vocab(const TfidfVocab& vocab) {
  std::string out = "n_docs," + std::to_string(vocab.n_docs) + "\n";
  for (const auto& [term, st] : vocab.terms) {
    out += text::csv_field(term) + "," + std::to_string(st.index) + "," + std::to_string(st.df) +
           "\n";
  }
  return out;
}

inline TfidfVocab parse_vocab(std::string_view contents) {
  auto fail = [](std::size_t line, const std::string& what) {
    return LocatedError(Errc::MalformedRecord, line, "vocab line " + std::to_string(line) + ": " +
                                                         what);
  };
  TfidfVocab vocab;
  std::size_t line_no = 0;
  std::vector<bool> seen_index;
  for (const auto& line : text::split(contents, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line.rfind("n_docs,", 0) != 0 || !text::parse_int(line.substr(7), vocab.n_docs)) {
        throw fail(line_no, "expected 'n_docs,<count>' header");
      }
      continue;
    }
    // Terms may be quoted when they contain commas; the last two fields never are.
    const auto c2 = line.rfind(',');
    const auto c1 = c2 == std::string::npos || c2 == 0 ? std::string::npos : line.rfind(',', c2 - 1);
    if (c1 == std::string::npos) throw fail(line_no, "expected term,index,df");
    std::string term = line.substr(0, c1);
    if (term.size() >= 2 && term.front() == '"' && term.back() == '"') {
      std::string unq;
      for (std::size_t i = 1; i + 1 < term.size(); ++i) {
        unq.push_back(term[i]);
        if (term[i] == '"') ++i;
      }
      term = std::move(unq);
    }
    TermStats st;
    if (!text::parse_int(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), st.index) ||
        !text::parse_int(std::string_view(line).substr(c2 + 1), st.df)) {
      throw fail(line_no, "bad index or df");
    }
    if (st.df < 1 || st.df > vocab.n_docs) throw fail(line_no, "df outside [1, n_docs]");
    if (!vocab.terms.emplace(std::move(term), st).second) throw fail(line_no, "duplicate term");
    if (seen_index.size() <= st.index) seen_index.resize(st.index + 1, false);
    if (seen_index[st.index]) throw fail(line_no, "duplicate index");
    seen_index[st.index] = true;
  }
  if (line_no == 0) throw fail(1, "empty vocab file");
  if (seen_index.size() != vocab.terms.size()) {
    throw Error(Errc::MalformedRecord, "vocab indices are not contiguous");
  }
  return vocab;
}

namespace detail {

inline std::string escape_prepend(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c == '\n') {
      out += "\\n";
    } else if (c == '\r') {
      out += "\\r";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

/// "Speaker (Tag-Name): text" per utterance, one line each. Backslashes and
/// line breaks inside text are escaped so every utterance stays on one line.
inline std::string render_prepend_text(const Conversation& conv,
                                       std::span<const TagAssignment> tags) {
  std::unordered_map<std::string_view, SocialOrientationTag> by_id;
  for (const auto& a : tags) by_id.emplace(a.utterance_id, a.tag);
  std::string out;
  for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
    const auto& u = conv.utterances[i];
    auto it = by_id.find(u.id);
    if (it == by_id.end()) throw Error(Errc::MissingTag, "no tag for utterance '" + u.id + "'");
    if (i > 0) out.push_back('\n');
    out += u.speaker_id;
    out += " (";
    out += tag_name(it->second);
    out += "): ";
    out += detail::escape_prepend(u.text);
  }
  return out;
}

/// Joins parts in argument order; the schema id is the part ids joined by '+'.
inline FeatureVector concat_features(std::span<const FeatureVector> parts) {
  if (parts.empty()) throw Error(Errc::InvalidArgument, "nothing to concatenate");
  if (parts.size() == 1) return parts.front();
  std::unordered_set<std::string_view> ids;
  std::string id;
  std::size_t dim = 0;
  bool any_sparse = false;
  for (const auto& p : parts) {
    if (!ids.insert(p.schema_id()).second) {
      throw Error(Errc::SchemaMismatch, "schema '" + p.schema_id() + "' appears twice");
    }
    if (!id.empty()) id += '+';
    id += p.schema_id();
    dim += p.dim();
    any_sparse = any_sparse || p.is_sparse();
  }
  if (!any_sparse) {
    std::vector<double> values;
    values.reserve(dim);
    for (const auto& p : parts) p.for_each([&](std::size_t, double x) { values.push_back(x); });
    return FeatureVector::dense(std::move(id), std::move(values));
  }
  std::vector<std::pair<std::uint32_t, double>> entries;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    p.for_each([&](std::size_t i, double x) {
      if (x != 0.0) entries.emplace_back(static_cast<std::uint32_t>(offset + i), x);
    });
    offset += p.dim();
  }
  return FeatureVector::sparse(std::move(id), dim, std::move(entries));
}

inline FeatureSchema concat_schemas(std::span<const FeatureSchema> parts) {
  if (parts.size() == 1) return parts.front();
  FeatureSchema out;
  std::unordered_set<std::string_view> ids;
  for (const auto& p : parts) {
    if (!ids.insert(p.schema_id).second) {
      throw Error(Errc::SchemaMismatch, "schema '" + p.schema_id + "' appears twice");
    }
    if (!out.schema_id.empty()) out.schema_id += '+';
    out.schema_id += p.schema_id;
    out.names.insert(out.names.end(), p.names.begin(), p.names.end());
  }
  return out;
}

enum class FeatureKind { SocialCounts, SentimentCounts, Tfidf };

inline std::string_view feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::SocialCounts: return kSocialSchema;
    case FeatureKind::SentimentCounts: return kSentimentSchema;
    case FeatureKind::Tfidf: return kTfidfSchema;
  }
  return kSocialSchema;
}

/// "social_counts+tfidf" -> {SocialCounts, Tfidf}.
inline std::vector<FeatureKind> parse_feature_set(std::string_view spec) {
  std::vector<FeatureKind> kinds;
  for (const auto& part : text::split(spec, '+')) {
    const auto name = text::trim(part);
    std::optional<FeatureKind> k;
    for (auto cand : {FeatureKind::SocialCounts, FeatureKind::SentimentCounts, FeatureKind::Tfidf}) {
      if (feature_kind_name(cand) == name) k = cand;
    }
    if (!k) throw Error(Errc::InvalidArgument, "unknown feature set '" + std::string(name) + "'");
    if (std::find(kinds.begin(), kinds.end(), *k) != kinds.end()) {
      throw Error(Errc::SchemaMismatch, "feature set '" + std::string(name) + "' listed twice");
    }
    kinds.push_back(*k);
  }
  if (kinds.empty()) throw Error(Errc::InvalidArgument, "empty feature set");
  return kinds;
}

/// A fitted feature recipe. Only TF-IDF needs fitting; the count encoders
/// are fixed.
class FeaturePipeline {
 public:
  explicit FeaturePipeline(std::vector<FeatureKind> kinds) : kinds_(std::move(kinds)) {
    if (kinds_.empty()) throw Error(Errc::InvalidArgument, "empty feature set");
  }

  bool needs_fit() const {
    return std::find(kinds_.begin(), kinds_.end(), FeatureKind::Tfidf) != kinds_.end();
  }

  void fit(const Corpus& train, const TokenizerConfig& cfg = {}) {
    if (needs_fit()) vocab_ = fit_tfidf(train, cfg);
  }

  void set_vocab(TfidfVocab vocab) { vocab_ = std::move(vocab); }
  const std::optional<TfidfVocab>& vocab() const { return vocab_; }
  const std::vector<FeatureKind>& kinds() const { return kinds_; }

  FeatureSchema schema() const {
    std::vector<FeatureSchema> parts;
    for (auto k : kinds_) {
      switch (k) {
        case FeatureKind::SocialCounts: parts.push_back(social_count_schema()); break;
        case FeatureKind::SentimentCounts: parts.push_back(sentiment_count_schema()); break;
        case FeatureKind::Tfidf: parts.push_back(require_vocab().schema()); break;
      }
    }
    return concat_schemas(parts);
  }

  /// `tags` must be aligned with conv.utterances. Sentiment tags, when the
  /// recipe uses them, come from the valence lexicon.
  FeatureVector transform(const Conversation& conv, std::span<const TagAssignment> tags) const {
    std::vector<SentimentTag> sentiment;
    if (std::find(kinds_.begin(), kinds_.end(), FeatureKind::SentimentCounts) != kinds_.end()) {
      for (const auto& s : tagging::sentiment_with_lexicon(conv)) sentiment.push_back(s.tag);
    }
    return transform_with_sentiment(conv, tags, sentiment);
  }

  FeatureVector transform_with_sentiment(const Conversation& conv,
                                         std::span<const TagAssignment> tags,
                                         std::span<const SentimentTag> sentiment) const {
    std::vector<FeatureVector> parts;
    for (auto k : kinds_) {
      switch (k) {
        case FeatureKind::SocialCounts: parts.push_back(social_count_features(tags)); break;
        case FeatureKind::SentimentCounts:
          if (sentiment.size() != conv.utterances.size()) {
            throw Error(Errc::LengthMismatch, "sentiment tags do not cover conversation '" +
                                                  conv.id + "'");
          }
          parts.push_back(sentiment_count_features(sentiment));
          break;
        case FeatureKind::Tfidf: parts.push_back(transform_tfidf(conv, require_vocab())); break;
      }
    }
    return concat_features(parts);
  }

 private:
  const TfidfVocab& require_vocab() const {
    if (!vocab_) throw Error(Errc::InvalidArgument, "TF-IDF features used before fit");
    return *vocab_;
  }

  std::vector<FeatureKind> kinds_;
  std::optional<TfidfVocab> vocab_;
};

/// CSV: conversation_id,outcome,<feature names...>, one row per conversation.
inline std::string feature_matrix_csv(const FeatureSchema& schema,
                                      std::span<const Conversation* const> convs,
                                      std::span<const FeatureVector> rows) {
  if (convs.size() != rows.size()) {
    throw Error(Errc::LengthMismatch, "feature rows and conversations differ in count");
  }
  std::string out = "conversation_id,outcome";
  for (const auto& n : schema.names) out += "," + text::csv_field(n);
  out += '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].dim() != schema.dimension()) {
      throw Error(Errc::DimensionMismatch, "feature row does not match schema");
    }
    out += text::csv_field(convs[r]->id);
    out += ',';
    out += outcome_name(convs[r]->outcome);
    for (double x : rows[r].to_dense()) {
      out += ',';
      out += text::format_double(x);
    }
    out += '\n';
  }
  return out;
}

}  // namespace socorient::features
