#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace halrm::scraper {

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::map<std::string, std::string> headers;
};

// Every outbound request goes through one of these; tests never reach the
// network. Implementations must be safe to call from several threads.
class Transport {
 public:
  virtual ~Transport() = default;
  // Throws NetworkError when no response could be obtained at all.
  virtual HttpResponse get(const HttpRequest& request) = 0;
};

// Splits "scheme://host[:port]/path?query" into its parts; query parameters
// are percent-decoded.
struct Url {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;
  std::map<std::string, std::string> query;

  static Url parse(const std::string& text);
};

std::string percent_encode(const std::string& s);

// Serves recorded responses. Each source subdirectory of the fixture root may
// hold a manifest.json:
//
//   [{"url": "...", "status": 200, "file": "page0.json"}, ...]
//
// with "body" allowed instead of "file". A request matches an entry when the
// scheme, host and path agree and every query parameter of the entry appears
// in the request with the same value. A trailing "*" on the path matches any
// suffix and a "*" value matches any value. Exact paths beat prefixes, then
// exact parameters count double wildcard ones; earlier entries win ties.
// Unmatched requests throw NetworkError.
class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(const std::filesystem::path& root);

  HttpResponse get(const HttpRequest& request) override;

  // Requests served so far, in order.
  std::vector<std::string> log() const;
  std::size_t entries() const { return entries_.size(); }

 private:
  struct Entry {
    Url url;
    int status = 200;
    std::filesystem::path file;
    std::string body;
    std::map<std::string, std::string> headers;
  };
  std::vector<Entry> entries_;
  mutable std::mutex mu_;
  std::vector<std::string> log_;
};

// Real HTTP(S) client.
std::unique_ptr<Transport> make_live_transport(int timeout_seconds = 60);

}  // namespace halrm::scraper
