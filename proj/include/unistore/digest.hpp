#pragma once

#include <string>
#include <string_view>

namespace unistore {

inline constexpr std::string_view kChecksumAlgorithm = "sha256";

std::string sha256_hex(std::string_view data);

}  // namespace unistore
