#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace termcast {

// FNV-1a 64-bit; used for run-manifest content digests and identifier buckets.
std::uint64_t fnv1a64(std::string_view bytes);

// Digest as a fixed-width lower-case hex string.
std::string fnv1a64_hex(std::string_view bytes);

// Digest of a file's raw bytes. Throws IoError if unreadable.
std::string digest_file(const std::string& path);

}  // namespace termcast
