#include "halrm/scraper/archive.hpp"

#include <cstdint>
#include <cstring>
#include <zlib.h>

#include "halrm/core/errors.hpp"

namespace halrm::scraper {

namespace {

std::string inflate_stream(std::string_view data, int window_bits) {
  z_stream zs{};
  if (inflateInit2(&zs, window_bits) != Z_OK) throw DataError("inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buf[1 << 15];
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw DataError(std::string("corrupt compressed data: ") + (zs.msg ? zs.msg : "inflate error"));
    }
    out.append(buf, sizeof buf - zs.avail_out);
    // Concatenated gzip members are legal; keep going.
    if (rc == Z_STREAM_END && zs.avail_in > 0 && window_bits > MAX_WBITS) {
      inflateReset(&zs);
      rc = Z_OK;
    }
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

std::string deflate_stream(std::string_view data, int window_bits) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, window_bits, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw DataError("deflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buf[1 << 15];
  int rc;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof buf;
    rc = deflate(&zs, Z_FINISH);
    out.append(buf, sizeof buf - zs.avail_out);
  } while (rc == Z_OK);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw DataError("deflate failed");
  return out;
}

std::uint32_t u16(std::string_view d, std::size_t at) {
  if (at + 2 > d.size()) throw DataError("truncated zip archive");
  return static_cast<unsigned char>(d[at]) | static_cast<unsigned char>(d[at + 1]) << 8;
}

std::uint32_t u32(std::string_view d, std::size_t at) { return u16(d, at) | u16(d, at + 2) << 16; }

void put16(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put32(std::string& s, std::uint32_t v) {
  put16(s, v & 0xffff);
  put16(s, v >> 16);
}

std::uint32_t crc(std::string_view d) {
  return static_cast<std::uint32_t>(crc32(0, reinterpret_cast<const Bytef*>(d.data()), static_cast<uInt>(d.size())));
}

}  // namespace

bool looks_gzipped(std::string_view data) {
  return data.size() >= 2 && static_cast<unsigned char>(data[0]) == 0x1f && static_cast<unsigned char>(data[1]) == 0x8b;
}

std::string gunzip(std::string_view data) { return inflate_stream(data, 32 + MAX_WBITS); }

std::string gzip(std::string_view data) { return deflate_stream(data, 16 + MAX_WBITS); }

void for_each_zip_entry(std::string_view a,
                        const std::function<void(const std::string&, const std::string&)>& visit) {
  if (a.size() < 22) throw DataError("not a zip archive");
  std::size_t eocd = std::string_view::npos;
  std::size_t lowest = a.size() > 22 + 65535 ? a.size() - 22 - 65535 : 0;
  for (std::size_t i = a.size() - 22 + 1; i-- > lowest;) {
    if (u32(a, i) == 0x06054b50) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string_view::npos) throw DataError("zip end of central directory not found");
  std::uint32_t count = u16(a, eocd + 10);
  std::uint32_t cd_offset = u32(a, eocd + 16);
  if (count == 0xffff || cd_offset == 0xffffffff) throw DataError("zip64 archives are not supported");

  std::size_t p = cd_offset;
  for (std::uint32_t n = 0; n < count; ++n) {
    if (u32(a, p) != 0x02014b50) throw DataError("corrupt zip central directory");
    std::uint32_t method = u16(a, p + 10);
    std::uint32_t csize = u32(a, p + 20);
    std::uint32_t usize = u32(a, p + 24);
    std::uint32_t name_len = u16(a, p + 28);
    std::uint32_t extra_len = u16(a, p + 30);
    std::uint32_t comment_len = u16(a, p + 32);
    std::uint32_t local = u32(a, p + 42);
    if (p + 46 + name_len > a.size()) throw DataError("truncated zip archive");
    std::string name(a.substr(p + 46, name_len));
    p += 46 + name_len + extra_len + comment_len;

    if (u32(a, local) != 0x04034b50) throw DataError("corrupt zip local header for " + name);
    std::size_t data_at = local + 30 + u16(a, local + 26) + u16(a, local + 28);
    if (data_at + csize > a.size()) throw DataError("truncated zip entry " + name);
    std::string_view raw = a.substr(data_at, csize);
    if (!name.empty() && name.back() == '/') continue;
    std::string contents;
    if (method == 0) {
      contents.assign(raw);
    } else if (method == 8) {
      contents = inflate_stream(raw, -MAX_WBITS);
    } else {
      throw DataError("unsupported zip compression method " + std::to_string(method) + " for " + name);
    }
    if (contents.size() != usize) throw DataError("zip entry size mismatch for " + name);
    visit(name, contents);
  }
}

std::string make_zip(const std::vector<std::pair<std::string, std::string>>& files) {
  std::string out, cd;
  for (const auto& [name, contents] : files) {
    std::string packed = deflate_stream(contents, -MAX_WBITS);
    std::uint32_t c = crc(contents);
    std::uint32_t offset = static_cast<std::uint32_t>(out.size());

    put32(out, 0x04034b50);
    put16(out, 20);
    put16(out, 0);
    put16(out, 8);
    put32(out, 0);  // dos time and date
    put32(out, c);
    put32(out, static_cast<std::uint32_t>(packed.size()));
    put32(out, static_cast<std::uint32_t>(contents.size()));
    put16(out, static_cast<std::uint32_t>(name.size()));
    put16(out, 0);
    out += name;
    out += packed;

    put32(cd, 0x02014b50);
    put16(cd, 20);
    put16(cd, 20);
    put16(cd, 0);
    put16(cd, 8);
    put32(cd, 0);
    put32(cd, c);
    put32(cd, static_cast<std::uint32_t>(packed.size()));
    put32(cd, static_cast<std::uint32_t>(contents.size()));
    put16(cd, static_cast<std::uint32_t>(name.size()));
    put16(cd, 0);
    put16(cd, 0);
    put16(cd, 0);
    put16(cd, 0);
    put32(cd, 0);
    put32(cd, offset);
    cd += name;
  }
  std::uint32_t cd_offset = static_cast<std::uint32_t>(out.size());
  out += cd;
  put32(out, 0x06054b50);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint32_t>(files.size()));
  put16(out, static_cast<std::uint32_t>(files.size()));
  put32(out, static_cast<std::uint32_t>(cd.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

}  // namespace halrm::scraper
