#pragma once

// Minimal JSON-over-HTTP client used by the remote tagger, the LLM labeler
// and the remote outcome predictor. Plain http only.

#include <chrono>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "socorient/error.hpp"
#include "socorient/text.hpp"

namespace socorient::http {

struct Endpoint {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/tag"
};

/// Splits "http://host[:port][/path]". https is rejected: the client is
/// built without TLS support.
inline Endpoint parse_endpoint(std::string_view url) {
  constexpr std::string_view kScheme = "http://";
  if (url.substr(0, kScheme.size()) != kScheme) {
    throw Error(Errc::InvalidArgument,
                "endpoint '" + std::string(url) + "' must start with http://");
  }
  const auto rest = url.substr(kScheme.size());
  const auto slash = rest.find('/');
  Endpoint ep;
  ep.scheme_host_port = std::string(kScheme) + std::string(rest.substr(0, slash));
  ep.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (rest.substr(0, slash).empty()) {
    throw Error(Errc::InvalidArgument, "endpoint '" + std::string(url) + "' has no host");
  }
  return ep;
}

struct ClientOptions {
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{60000};
  std::vector<std::pair<std::string, std::string>> headers;
};

/// POSTs `body` and returns the parsed JSON response. Connection failures
/// and non-2xx statuses are TransportError; an unparseable body is a
/// ProtocolError.
inline nlohmann::json post_json(const Endpoint& ep, const nlohmann::json& body,
                                const ClientOptions& opts = {}) {
  httplib::Client client(ep.scheme_host_port);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(
      opts.connect_timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(opts.read_timeout));
  httplib::Headers headers;
  for (const auto& [k, v] : opts.headers) headers.emplace(k, v);

  auto res = client.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(Errc::TransportError, "POST " + ep.scheme_host_port + ep.path + " failed: " +
                                          httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(Errc::TransportError, "POST " + ep.scheme_host_port + ep.path +
                                          " returned HTTP " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ProtocolError, "response is not JSON: " + std::string(e.what()));
  }
}

}  // namespace socorient::http
