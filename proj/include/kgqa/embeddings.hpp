// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace kgqa {

/// Dense question embedding. Finite values, dimension fixed per embedder.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(Eigen::VectorXd values);

    Eigen::Index dimension() const noexcept { return values_.size(); }
    const Eigen::VectorXd& values() const noexcept { return values_; }

    bool operator==(const EmbeddingVector& other) const
    {
        return values_.size() == other.values_.size() && values_ == other.values_;
    }

private:
    Eigen::VectorXd values_;
};

/// Cosine of the angle between `a` and `b`, clamped to [-1, 1].
/// Throws InputError on dimension mismatch or an all-zero argument.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
public:
    virtual ~Embedder() = default;
    /// Throws InputError when `text` is blank.
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    virtual Eigen::Index dimension() const = 0;
    /// Stable identifier written into pool files.
    virtual std::string id() const = 0;
};

/// Deterministic feature hashing over word unigrams, word bigrams and padded
/// character trigrams, L2-normalized.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(Eigen::Index dimension, std::uint64_t seed = 0x5eed);

    EmbeddingVector embed(std::string_view text) const override;
    Eigen::Index dimension() const override { return dimension_; }
    std::string id() const override;

private:
    Eigen::Index dimension_;
    std::uint64_t seed_;
};

struct HttpEmbedderOptions {
    std::string endpoint; ///< OpenAI-style /embeddings URL
    std::string model = "intfloat/multilingual-e5-large";
    Eigen::Index dimension = 1024;
    std::string prefix = "query: ";
    std::string api_key;
    std::chrono::milliseconds timeout{30'000};
};

class HttpEmbedder final : public Embedder {
public:
    explicit HttpEmbedder(HttpEmbedderOptions options);

    EmbeddingVector embed(std::string_view text) const override;
    Eigen::Index dimension() const override { return options_.dimension; }
    std::string id() const override { return "http:" + options_.model; }

private:
    HttpEmbedderOptions options_;
};

} // namespace kgqa
