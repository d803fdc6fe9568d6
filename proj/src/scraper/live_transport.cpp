#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "halrm/core/errors.hpp"
#include "halrm/scraper/transport.hpp"

namespace halrm::scraper {

namespace {

class LiveTransport : public Transport {
 public:
  explicit LiveTransport(int timeout) : timeout_(timeout) {}

  HttpResponse get(const HttpRequest& request) override {
    auto scheme_end = request.url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("not an absolute URL: " + request.url);
    auto path_start = request.url.find_first_of("/?", scheme_end + 3);
    std::string origin = request.url.substr(0, path_start);
    std::string target = path_start == std::string::npos ? "/" : request.url.substr(path_start);
    if (target.front() == '?') target.insert(0, "/");

    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout_, 0);
    client.set_read_timeout(timeout_, 0);
    httplib::Headers headers(request.headers.begin(), request.headers.end());
    auto res = client.Get(target, headers);
    if (!res) throw NetworkError(request.url + ": " + httplib::to_string(res.error()));
    HttpResponse out;
    out.status = res->status;
    out.body = std::move(res->body);
    for (const auto& [k, v] : res->headers) out.headers[k] = v;
    return out;
  }

 private:
  int timeout_;
};

}  // namespace

std::unique_ptr<Transport> make_live_transport(int timeout_seconds) {
  return std::make_unique<LiveTransport>(timeout_seconds);
}

}  // namespace halrm::scraper
