#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace sysarch {

/// Reads a whole file; throws Error(IoError).
std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view data);

/// Fixed-point decimal text with `decimals` digits, no locale, `-0` normalized.
std::string format_fixed(double value, int decimals);

/// Rounds half away from zero to `decimals` places.
double round_to(double value, int decimals);

/// Runs fn(i) for i in [0, n) on up to `cap` worker threads. The first
/// exception thrown by any task is rethrown after all workers finish.
void parallel_for_capped(std::size_t n, std::size_t cap, const std::function<void(std::size_t)>& fn);

/// Process-wide count of outbound network requests (model calls and
/// embedding lookups). Offline commands must leave it at zero. When the
/// environment variable SYSARCH_FORBID_NETWORK is set, noting a request
/// throws Error(ProviderUnavailable) instead.
void note_network_request();
[[nodiscard]] std::size_t network_requests() noexcept;

}  // namespace sysarch
