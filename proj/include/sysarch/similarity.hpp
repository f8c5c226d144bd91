#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sysarch {

/// Text similarity backend. Implementations must be symmetric, return values
/// in [0,1], and be safe to call concurrently.
class SimilarityProvider {
public:
    virtual ~SimilarityProvider() = default;
    [[nodiscard]] virtual double similarity(std::string_view a, std::string_view b) const = 0;
    [[nodiscard]] virtual std::string id() const = 0;
    /// Optional batching hook: called with every text before a burst of
    /// similarity() calls. Throws Error(ProviderUnavailable) on failure.
    virtual void prepare(std::span<const std::string> texts) const { (void)texts; }
};

/// Lowercased word tokens; any byte outside [A-Za-z0-9] and below 0x80 separates tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Cosine over word-frequency vectors. Needs no network and no model.
class TfCosineProvider final : public SimilarityProvider {
public:
    [[nodiscard]] double similarity(std::string_view a, std::string_view b) const override;
    [[nodiscard]] std::string id() const override { return "tf-cosine"; }
};

/// Embedding service client: POST {model, input:[texts]} to `endpoint`;
/// accepts either OpenAI-style `{"data":[{"embedding":[...]}]}` or
/// `{"embeddings":[[...]]}`. Cosine is computed locally; vectors are cached.
class EmbeddingProvider final : public SimilarityProvider {
public:
    EmbeddingProvider(std::string endpoint, std::string model, std::string credential_env);

    [[nodiscard]] double similarity(std::string_view a, std::string_view b) const override;
    [[nodiscard]] std::string id() const override { return "embedding:" + model_; }
    void prepare(std::span<const std::string> texts) const override;

private:
    std::vector<double> vector_for(std::string_view text) const;
    std::vector<std::vector<double>> fetch(std::span<const std::string> texts) const;

    std::string endpoint_;
    std::string model_;
    std::string credential_env_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::vector<double>, std::less<>> cache_;
};

/// Wraps a primary provider; if it reports PROVIDER_UNAVAILABLE the
/// word-frequency fallback answers instead and `degraded()` turns true.
class FallbackProvider final : public SimilarityProvider {
public:
    explicit FallbackProvider(std::shared_ptr<SimilarityProvider> primary);

    [[nodiscard]] double similarity(std::string_view a, std::string_view b) const override;
    [[nodiscard]] std::string id() const override;
    void prepare(std::span<const std::string> texts) const override;
    [[nodiscard]] bool degraded() const noexcept { return degraded_.load(); }

private:
    std::shared_ptr<SimilarityProvider> primary_;
    TfCosineProvider fallback_;
    mutable std::atomic<bool> degraded_{false};
};

/// Cosine of two dense vectors, clamped to [0,1]; 0 when either is zero.
double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace sysarch
