#include "guard/embedding.hpp"

#include <cmath>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "guard/error.hpp"
#include "guard/http_util.hpp"
#include "guard/taxonomy.hpp"

namespace guard::prompts {

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw ShapeMismatch("embedding dims differ");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return dot;
}

static void l2_normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw ZeroNormRow("embedding has zero norm");
    for (double& x : v) x /= norm;
}

// FNV-1a; std::hash is not stable across implementations
static std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

EmbeddingVector HashedNgramProvider::embed(const std::string& text) {
    const std::string norm = normalize_label(text);
    std::vector<double> counts(kDim, 0.0);
    if (norm.size() < 3) {
        counts[fnv1a(norm) % kDim] += 1.0;
    } else {
        for (std::size_t i = 0; i + 3 <= norm.size(); ++i)
            counts[fnv1a(norm.substr(i, 3)) % kDim] += 1.0;
    }
    l2_normalize(counts);
    return EmbeddingVector{std::move(counts), name()};
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::string base_url, std::string token_env,
                                                 double timeout_seconds)
    : base_url_(std::move(base_url)),
      token_env_(std::move(token_env)),
      timeout_seconds_(timeout_seconds) {}

EmbeddingVector RemoteEmbeddingProvider::embed(const std::string& text) {
    httplib::Client client(base_url_);
    http_util::set_timeouts(client, timeout_seconds_);
    httplib::Headers headers;
    if (!token_env_.empty()) {
        const char* token = std::getenv(token_env_.c_str());
        if (token != nullptr && *token != '\0')
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    nlohmann::json body{{"text", text}};
    auto res = client.Post("/embed", headers, body.dump(), "application/json");
    if (!res) throw ProviderUnavailable("embedding service unreachable: " + base_url_);
    if (res->status != 200)
        throw ProviderUnavailable("embedding service returned HTTP " +
                                  std::to_string(res->status));
    try {
        auto doc = nlohmann::json::parse(res->body);
        std::vector<double> values = doc.at("vector").get<std::vector<double>>();
        l2_normalize(values);
        return EmbeddingVector{std::move(values), name()};
    } catch (const nlohmann::json::exception& e) {
        throw ProviderUnavailable(std::string("bad embedding response: ") + e.what());
    }
}

EmbeddingVector embed(const std::string& text, EmbeddingProvider& provider) {
    if (text.empty()) throw PreconditionViolation("cannot embed empty text");
    EmbeddingVector v = provider.embed(text);
    l2_normalize(v.values);
    return v;
}

}  // namespace guard::prompts
