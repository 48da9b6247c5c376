#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace guard::prompts {

struct EmbeddingVector {
    std::vector<double> values;  // unit L2 norm
    std::string provider;

    std::size_t dim() const { return values.size(); }
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic offline provider: hashed character 3-gram counts over the
/// normalized text, fixed 512 dimensions, L2-normalized.
class HashedNgramProvider : public EmbeddingProvider {
public:
    static constexpr std::size_t kDim = 512;

    EmbeddingVector embed(const std::string& text) override;
    std::string name() const override { return "ngram-512"; }
};

/// Remote HTTP embedding service. POST {base_url}/embed {"text": ...} ->
/// {"vector": [...]}. Bearer token read from `token_env` when nonempty.
/// Throws ProviderUnavailable on transport or protocol failure.
class RemoteEmbeddingProvider : public EmbeddingProvider {
public:
    RemoteEmbeddingProvider(std::string base_url, std::string token_env = "GUARD_EMBED_TOKEN",
                            double timeout_seconds = 30.0);

    EmbeddingVector embed(const std::string& text) override;
    std::string name() const override { return "remote:" + base_url_; }

private:
    std::string base_url_;
    std::string token_env_;
    double timeout_seconds_;
};

/// Checked entry point: rejects empty text, guarantees unit norm.
EmbeddingVector embed(const std::string& text, EmbeddingProvider& provider);

}  // namespace guard::prompts
