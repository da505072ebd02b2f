#pragma once

#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "pb/llm.hpp"

namespace pb::sim {

/// Cosine similarity. Throws std::invalid_argument on dimension mismatch;
/// returns 0 when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> embed(const std::string& text) = 0;
};

double similarity(SimilarityProvider& provider, const std::string& a,
                  const std::string& b);

/// Character-trigram term-frequency embedding, feature-hashed to a fixed
/// dimension and L2-normalized. Needs no model and is fully deterministic.
/// Texts shorter than one trigram hash as a single term; empty text embeds
/// to the zero vector. Embeddings are memoized per instance.
class LexicalEmbedder : public SimilarityProvider {
 public:
  explicit LexicalEmbedder(std::size_t dim = 512);

  std::string name() const override { return "lexical-trigram"; }
  std::vector<double> embed(const std::string& text) override;
  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
  std::mutex mu_;
  std::map<std::string, std::vector<double>> memo_;
};

/// Client for an embeddings endpoint: POST {model, input: [texts]} with
/// bearer auth, reply {data: [{embedding: [...]}, ...]} in input order.
class RemoteEmbedder : public SimilarityProvider {
 public:
  struct Config {
    std::string base_url;
    std::string model;
    std::string path = "/v1/embeddings";
    std::string auth_env = "PB_API_KEY";
    int timeout_ms = 30000;
    llm::RetryPolicy retry;
  };

  explicit RemoteEmbedder(Config cfg);

  std::string name() const override { return "remote:" + cfg_.model; }
  std::vector<double> embed(const std::string& text) override;
  std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts);

 private:
  Config cfg_;
  std::mutex mu_;
  std::map<std::string, std::vector<double>> memo_;
};

}  // namespace pb::sim
