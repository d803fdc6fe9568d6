#include "halrm/scraper/transport.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "halrm/core/errors.hpp"

namespace halrm::scraper {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 && hex_value(s[i + 2]) >= 0) {
      out.push_back(static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2])));
      i += 2;
    } else if (s[i] == '+') {
      out.push_back(' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read fixture " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string percent_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

Url Url::parse(const std::string& text) {
  Url u;
  auto scheme_end = text.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("not an absolute URL: " + text);
  u.scheme = text.substr(0, scheme_end);
  auto rest = text.substr(scheme_end + 3);
  auto path_start = rest.find_first_of("/?");
  std::string authority = rest.substr(0, path_start);
  std::string tail = path_start == std::string::npos ? "/" : rest.substr(path_start);
  auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    u.host = authority.substr(0, colon);
    u.port = std::stoi(authority.substr(colon + 1));
  } else {
    u.host = authority;
    u.port = u.scheme == "https" ? 443 : 80;
  }
  auto q = tail.find('?');
  u.path = tail.substr(0, q);
  if (u.path.empty()) u.path = "/";
  if (q != std::string::npos) {
    std::string query = tail.substr(q + 1);
    std::size_t pos = 0;
    while (pos <= query.size()) {
      auto amp = query.find('&', pos);
      std::string part = query.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
      if (!part.empty()) {
        auto eq = part.find('=');
        if (eq == std::string::npos) {
          u.query[percent_decode(part)] = "";
        } else {
          u.query[percent_decode(part.substr(0, eq))] = percent_decode(part.substr(eq + 1));
        }
      }
      if (amp == std::string::npos) break;
      pos = amp + 1;
    }
  }
  return u;
}

ReplayTransport::ReplayTransport(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw DataError("fixture directory not found: " + root.string());
  std::vector<std::filesystem::path> manifests;
  if (std::filesystem::exists(root / "manifest.json")) manifests.push_back(root / "manifest.json");
  std::vector<std::filesystem::path> subdirs;
  for (const auto& e : std::filesystem::directory_iterator(root))
    if (e.is_directory()) subdirs.push_back(e.path());
  std::sort(subdirs.begin(), subdirs.end());
  for (const auto& d : subdirs)
    if (std::filesystem::exists(d / "manifest.json")) manifests.push_back(d / "manifest.json");

  for (const auto& m : manifests) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_all(m));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(m.string() + ": " + e.what());
    }
    for (const auto& item : j) {
      Entry e;
      e.url = Url::parse(item.at("url").get<std::string>());
      e.status = item.value("status", 200);
      if (item.contains("file")) e.file = m.parent_path() / item.at("file").get<std::string>();
      e.body = item.value("body", std::string());
      if (item.contains("headers")) e.headers = item.at("headers").get<std::map<std::string, std::string>>();
      entries_.push_back(std::move(e));
    }
  }
}

HttpResponse ReplayTransport::get(const HttpRequest& request) {
  Url want = Url::parse(request.url);
  const Entry* best = nullptr;
  int best_rank = -1;
  for (const auto& e : entries_) {
    if (e.url.scheme != want.scheme || e.url.host != want.host) continue;
    bool prefix = !e.url.path.empty() && e.url.path.back() == '*';
    if (prefix ? want.path.compare(0, e.url.path.size() - 1, e.url.path, 0, e.url.path.size() - 1) != 0
               : e.url.path != want.path)
      continue;
    int rank = prefix ? 0 : 1 << 20;
    bool ok = true;
    for (const auto& [k, v] : e.url.query) {
      auto it = want.query.find(k);
      if (it == want.query.end() || (v != "*" && it->second != v)) {
        ok = false;
        break;
      }
      rank += v == "*" ? 1 : 2;
    }
    if (ok && rank > best_rank) {
      best = &e;
      best_rank = rank;
    }
  }
  {
    std::lock_guard lock(mu_);
    log_.push_back(request.url);
  }
  if (!best) throw NetworkError("no recorded response for " + request.url);
  HttpResponse r;
  r.status = best->status;
  r.headers = best->headers;
  r.body = best->file.empty() ? best->body : read_all(best->file);
  return r;
}

std::vector<std::string> ReplayTransport::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

}  // namespace halrm::scraper
