#pragma once

// Shared fixtures for the unit suite and the acceptance runner.

#include <array>
#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "httplib.h"
#include "json.hpp"
#include "socorient/corpus.hpp"
#include "socorient/explain.hpp"
#include "socorient/model.hpp"
#include "socorient/rng.hpp"
#include "socorient/tagging/cache.hpp"
#include "socorient/tags.hpp"

namespace testing_support {

using namespace socorient;

inline Utterance utt(std::string id, std::string speaker, std::string text) {
  Utterance u;
  u.id = std::move(id);
  u.speaker_id = std::move(speaker);
  u.text = std::move(text);
  return u;
}

inline Conversation conv(std::string id, std::vector<Utterance> utts,
                         Outcome outcome = Outcome::Unlabeled) {
  Conversation c;
  c.id = std::move(id);
  c.utterances = std::move(utts);
  c.outcome = outcome;
  c.renumber();
  return c;
}

inline TagAssignment tag(std::string uid, SocialOrientationTag t) {
  return {std::move(uid), t, TagSource::Human, std::nullopt};
}

/// Random printable text, sometimes with table-hostile characters.
inline std::string random_text(SeededRng& rng, std::size_t max_len) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyz ABCDEFGHIJ 0123456789 .,;:!?'\"-|\\*_";
  const std::size_t n = 1 + rng.uniform_index(max_len);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += alphabet[rng.uniform_index(alphabet.size())];
  if (rng.bernoulli(0.1)) s += "\xc3\xa9\xe2\x82\xac";  // é€
  return s;
}

/// Conversation with n utterances, up to `speakers` speakers, and a tag per
/// utterance (Not Available allowed when `allow_na`).
struct TaggedConversation {
  Conversation conv;
  std::vector<TagAssignment> tags;
};

inline TaggedConversation random_tagged(SeededRng& rng, const std::string& id, std::size_t n,
                                        std::size_t speakers, bool allow_na, std::size_t max_text) {
  TaggedConversation out;
  out.conv.id = id;
  for (std::size_t i = 0; i < n; ++i) {
    auto u = utt(id + "-" + std::to_string(i), "s" + std::to_string(rng.uniform_index(speakers)),
                 random_text(rng, max_text));
    const auto t = allow_na && rng.bernoulli(0.1)
                       ? SocialOrientationTag::NotAvailable
                       : kCircumplexTags[rng.uniform_index(kCircumplexTagCount)];
    out.tags.push_back(tag(u.id, t));
    out.conv.utterances.push_back(std::move(u));
  }
  out.conv.renumber();
  return out;
}

/// Nested-loop reference for the co-occurrence ratio.
inline explain::TagMatrix brute_force_ratio(const std::vector<TaggedConversation>& fail,
                                            const std::vector<TaggedConversation>& success,
                                            double smoothing) {
  auto count = [](const std::vector<TaggedConversation>& convs) {
    explain::TagMatrix m{};
    for (const auto& tc : convs) {
      const auto& u = tc.conv.utterances;
      for (std::size_t i = 0; i < u.size(); ++i) {
        for (std::size_t j = 0; j < u.size(); ++j) {
          if (i == j || u[i].speaker_id == u[j].speaker_id) continue;
          const auto a = tc.tags[i].tag, b = tc.tags[j].tag;
          if (a == SocialOrientationTag::NotAvailable || b == SocialOrientationTag::NotAvailable) {
            continue;
          }
          m[index_of(a)][index_of(b)] += 1.0;
        }
      }
    }
    return m;
  };
  auto normalize = [&](explain::TagMatrix m) {
    double total = 0.0;
    for (auto& row : m) {
      for (auto& x : row) {
        x += smoothing;
        total += x;
      }
    }
    for (auto& row : m) {
      for (auto& x : row) x /= total;
    }
    return m;
  };
  const auto pf = normalize(count(fail));
  const auto ps = normalize(count(success));
  explain::TagMatrix r{};
  for (std::size_t a = 0; a < kCircumplexTagCount; ++a) {
    for (std::size_t b = 0; b < kCircumplexTagCount; ++b) r[a][b] = pf[a][b] / ps[a][b];
  }
  return r;
}

/// Looks only at utterance text, never at tags.
class TextOnlyPredictor final : public model::OutcomePredictor {
 public:
  model::OutcomePrediction predict(const Conversation& c,
                                   std::span<const TagAssignment>) const override {
    std::size_t chars = 0;
    for (const auto& u : c.utterances) chars += u.text.size();
    const double p = (chars % 7) / 6.0;
    return {c.id, p, model::label_for(p)};
  }
  std::string name() const override { return "text-only"; }
};

/// Failure iff the conversation carries any Cold tag.
class ColdPredictor final : public model::OutcomePredictor {
 public:
  model::OutcomePrediction predict(const Conversation& c,
                                   std::span<const TagAssignment> tags) const override {
    bool cold = false;
    for (const auto& t : tags) cold = cold || t.tag == SocialOrientationTag::Cold;
    const double p = cold ? 0.9 : 0.1;
    return {c.id, p, model::label_for(p)};
  }
  std::string name() const override { return "cold"; }
};

/// Local HTTP server on an ephemeral port, stopped on destruction.
class MockServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit MockServer(const std::string& path, Handler h) {
    server_.Post(path, [h](const httplib::Request& req, httplib::Response& res) { h(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

/// A port nothing listens on (bound, never listened, then released).
inline int dead_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() /
           ("socorient-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
