#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace halrm::scraper {

// gzip or zlib stream in, bytes out. Throws DataError on corrupt input.
std::string gunzip(std::string_view data);
std::string gzip(std::string_view data);

bool looks_gzipped(std::string_view data);

// Calls visit(name, contents) for each file of a zip archive, in central
// directory order. Stored and deflated entries are supported, zip64 is not.
void for_each_zip_entry(std::string_view archive,
                        const std::function<void(const std::string&, const std::string&)>& visit);

// Deflated zip archive of the given (name, contents) pairs.
std::string make_zip(const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace halrm::scraper
