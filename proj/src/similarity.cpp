#include "sysarch/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "sysarch/error.hpp"
#include "sysarch/util.hpp"

namespace sysarch {

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        const bool word = c >= 0x80 || std::isalnum(c) != 0;
        if (word) {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        tokens.push_back(std::move(cur));
    }
    return tokens;
}

double TfCosineProvider::similarity(std::string_view a, std::string_view b) const
{
    std::map<std::string, std::pair<long, long>> counts;
    for (auto& t : tokenize(a)) {
        counts[std::move(t)].first += 1;
    }
    for (auto& t : tokenize(b)) {
        counts[std::move(t)].second += 1;
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [_, c] : counts) {
        dot += static_cast<double>(c.first * c.second);
        na += static_cast<double>(c.first * c.first);
        nb += static_cast<double>(c.second * c.second);
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    // Integer norms: sqrt(na * nb) is exact for identical texts, so sim(a,a) == 1.
    return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

double cosine(std::span<const double> a, std::span<const double> b)
{
    const std::size_t n = std::min(a.size(), b.size());
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

EmbeddingProvider::EmbeddingProvider(std::string endpoint, std::string model, std::string credential_env)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), credential_env_(std::move(credential_env))
{
}

std::vector<std::vector<double>> EmbeddingProvider::fetch(std::span<const std::string> texts) const
{
    // Split "scheme://host[:port]/path".
    const auto scheme_end = endpoint_.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::ProviderUnavailable, "embedding endpoint must be an absolute URL");
    }
    const auto path_start = endpoint_.find('/', scheme_end + 3);
    const std::string base = endpoint_.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : endpoint_.substr(path_start);

    nlohmann::json body;
    body["model"] = model_;
    body["input"] = std::vector<std::string>(texts.begin(), texts.end());

    httplib::Headers headers;
    if (!credential_env_.empty()) {
        if (const char* key = std::getenv(credential_env_.c_str()); key != nullptr && *key != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    note_network_request();
    httplib::Client client(base);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res || res->status != 200) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "embedding request failed" + (res ? " with HTTP " + std::to_string(res->status) : std::string{}));
    }
    std::vector<std::vector<double>> vectors;
    try {
        const auto reply = nlohmann::json::parse(res->body);
        if (reply.contains("data")) {
            for (const auto& item : reply["data"]) {
                vectors.push_back(item.at("embedding").get<std::vector<double>>());
            }
        } else {
            vectors = reply.at("embeddings").get<std::vector<std::vector<double>>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable, std::string("malformed embedding reply: ") + e.what());
    }
    if (vectors.size() != texts.size()) {
        throw Error(ErrorCode::ProviderUnavailable, "embedding reply has the wrong number of vectors");
    }
    return vectors;
}

void EmbeddingProvider::prepare(std::span<const std::string> texts) const
{
    std::vector<std::string> missing;
    {
        std::lock_guard lock(mutex_);
        for (const auto& t : texts) {
            if (!cache_.contains(t) && std::find(missing.begin(), missing.end(), t) == missing.end()) {
                missing.push_back(t);
            }
        }
    }
    if (missing.empty()) {
        return;
    }
    auto vectors = fetch(missing);
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < missing.size(); ++i) {
        cache_.emplace(missing[i], std::move(vectors[i]));
    }
}

std::vector<double> EmbeddingProvider::vector_for(std::string_view text) const
{
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(text); it != cache_.end()) {
            return it->second;
        }
    }
    const std::string key(text);
    auto vectors = fetch(std::span<const std::string>(&key, 1));
    std::lock_guard lock(mutex_);
    return cache_.emplace(key, std::move(vectors.front())).first->second;
}

double EmbeddingProvider::similarity(std::string_view a, std::string_view b) const
{
    if (a == b && !a.empty()) {
        return 1.0;
    }
    const auto va = vector_for(a);
    const auto vb = vector_for(b);
    return cosine(va, vb);
}

FallbackProvider::FallbackProvider(std::shared_ptr<SimilarityProvider> primary) : primary_(std::move(primary)) {}

double FallbackProvider::similarity(std::string_view a, std::string_view b) const
{
    if (!degraded_.load()) {
        try {
            return std::clamp(primary_->similarity(a, b), 0.0, 1.0);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ProviderUnavailable) {
                throw;
            }
            degraded_ = true;
        }
    }
    return fallback_.similarity(a, b);
}

void FallbackProvider::prepare(std::span<const std::string> texts) const
{
    if (degraded_.load()) {
        return;
    }
    try {
        primary_->prepare(texts);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ProviderUnavailable) {
            throw;
        }
        degraded_ = true;
    }
}

std::string FallbackProvider::id() const
{
    return degraded_.load() ? primary_->id() + " (fallback: tf-cosine)" : primary_->id();
}

}  // namespace sysarch
