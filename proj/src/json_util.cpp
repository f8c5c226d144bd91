#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <openssl/sha.h>

#include "sysarch/error.hpp"
#include "sysarch/util.hpp"

namespace sysarch {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open `" + path.string() + "`", path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoError, "cannot write `" + tmp.string() + "`", tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error(ErrorCode::IoError, "short write to `" + tmp.string() + "`", tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * SHA256_DIGEST_LENGTH);
    for (unsigned char b : digest) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xF]);
    }
    return out;
}

double round_to(double value, int decimals)
{
    const double scale = std::pow(10.0, decimals);
    return std::round(value * scale) / scale;
}

std::string format_fixed(double value, int decimals)
{
    double v = round_to(value, decimals);
    if (v == 0.0) {
        v = 0.0;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

void parallel_for_capped(std::size_t n, std::size_t cap, const std::function<void(std::size_t)>& fn)
{
    if (n == 0) {
        return;
    }
    const std::size_t workers = std::clamp<std::size_t>(cap, 1, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

namespace {
std::atomic<std::size_t> g_network_requests{0};
}

void note_network_request()
{
    g_network_requests.fetch_add(1, std::memory_order_relaxed);
    if (const char* forbid = std::getenv("SYSARCH_FORBID_NETWORK"); forbid != nullptr && *forbid != '\0') {
        throw Error(ErrorCode::ProviderUnavailable, "network access attempted while SYSARCH_FORBID_NETWORK is set");
    }
}

std::size_t network_requests() noexcept
{
    return g_network_requests.load(std::memory_order_relaxed);
}

}  // namespace sysarch
