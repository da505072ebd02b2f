#include "pb/similarity.hpp"

#include <cmath>
#include <stdexcept>

#include "pb/hash.hpp"
#include "pb/http_client.hpp"

namespace pb::sim {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double similarity(SimilarityProvider& provider, const std::string& a,
                  const std::string& b) {
  auto va = provider.embed(a);
  auto vb = provider.embed(b);
  return cosine(va, vb);
}

LexicalEmbedder::LexicalEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw std::invalid_argument("LexicalEmbedder: dim must be > 0");
}

std::vector<double> LexicalEmbedder::embed(const std::string& text) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = memo_.find(text); it != memo_.end()) return it->second;
  }

  std::vector<double> v(dim_, 0.0);
  if (!text.empty()) {
    if (text.size() < 3) {
      v[fnv1a64(text) % dim_] += 1.0;
    } else {
      for (std::size_t i = 0; i + 3 <= text.size(); ++i)
        v[fnv1a64(std::string_view(text).substr(i, 3)) % dim_] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& x : v) x /= norm;
  }

  std::lock_guard<std::mutex> lock(mu_);
  memo_.emplace(text, v);
  return v;
}

RemoteEmbedder::RemoteEmbedder(Config cfg) : cfg_(std::move(cfg)) {}

std::vector<double> RemoteEmbedder::embed(const std::string& text) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = memo_.find(text); it != memo_.end()) return it->second;
  }
  auto vectors = embed_batch({text});
  std::lock_guard<std::mutex> lock(mu_);
  memo_.emplace(text, vectors[0]);
  return vectors[0];
}

std::vector<std::vector<double>> RemoteEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  nlohmann::json body{{"model", cfg_.model}, {"input", texts}};
  nlohmann::json reply = net::post_json(cfg_.base_url, cfg_.path, cfg_.auth_env,
                                        cfg_.timeout_ms, cfg_.retry, body);

  auto data = reply.find("data");
  if (data == reply.end() || !data->is_array() || data->size() != texts.size())
    throw llm::ProviderError(llm::ErrorKind::refusal,
                             "embeddings reply has no matching data array");

  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& item : *data) {
    auto emb = item.find("embedding");
    if (emb == item.end() || !emb->is_array())
      throw llm::ProviderError(llm::ErrorKind::refusal,
                               "embeddings reply entry has no embedding array");
    out.push_back(emb->get<std::vector<double>>());
  }
  return out;
}

}  // namespace pb::sim
