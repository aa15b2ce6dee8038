// SPDX-License-Identifier: Apache-2.0
#include "kgqa/embeddings.hpp"

#include "kgqa/error.hpp"
#include "kgqa/http.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <vector>

namespace kgqa {

EmbeddingVector::EmbeddingVector(Eigen::VectorXd values)
    : values_(std::move(values))
{
    if (values_.size() == 0)
        throw InputError("embedding must have a positive dimension");
    if (!values_.allFinite())
        throw InputError("embedding contains non-finite values");
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b)
{
    if (a.dimension() != b.dimension())
        throw InputError("cosine similarity of vectors with dimensions " + std::to_string(a.dimension()) + " and "
                         + std::to_string(b.dimension()));
    double const na = a.values().norm();
    double const nb = b.values().norm();
    if (na == 0.0 || nb == 0.0)
        throw InputError("cosine similarity of a zero vector");
    double const value = a.values().dot(b.values()) / (na * nb);
    return std::clamp(value, -1.0, 1.0);
}

namespace {

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed)
{
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    // final avalanche so low bits are usable for indexing
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

std::vector<std::string> words_of(std::string_view text)
{
    std::vector<std::string> words;
    std::string current;
    for (unsigned char c : text) {
        // bytes >= 0x80 belong to multi-byte UTF-8 sequences and stay inside words
        bool const word_char = c >= 0x80 || std::isalnum(c);
        if (word_char) {
            current.push_back(static_cast<char>(c >= 0x80 ? c : std::tolower(c)));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty())
        words.push_back(std::move(current));
    return words;
}

} // namespace

HashingEmbedder::HashingEmbedder(Eigen::Index dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed)
{
    if (dimension_ <= 0)
        throw InputError("embedding dimension must be positive");
}

std::string HashingEmbedder::id() const
{
    return "hash:" + std::to_string(dimension_) + ":" + std::to_string(seed_);
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) const
{
    auto const first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        throw InputError("cannot embed blank text");

    Eigen::VectorXd v = Eigen::VectorXd::Zero(dimension_);
    auto add = [&](std::string_view feature, double weight) {
        auto const h = fnv1a(feature, seed_);
        auto const index = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension_));
        v[index] += (h >> 63) ? -weight : weight;
    };

    auto const words = words_of(text);
    for (std::size_t i = 0; i < words.size(); ++i) {
        add("w:" + words[i], 1.0);
        if (i + 1 < words.size())
            add("b:" + words[i] + " " + words[i + 1], 0.5);
    }
    std::string padded = "^";
    padded.append(text);
    padded.push_back('$');
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i)
        add("c:" + padded.substr(i, 3), 0.25);

    double const norm = v.norm();
    if (norm == 0.0)
        v[static_cast<Eigen::Index>(fnv1a(text, seed_) % static_cast<std::uint64_t>(dimension_))] = 1.0;
    else
        v /= norm;
    return EmbeddingVector(std::move(v));
}

HttpEmbedder::HttpEmbedder(HttpEmbedderOptions options)
    : options_(std::move(options))
{
    if (options_.endpoint.empty())
        throw InputError("embedding endpoint is not configured");
    if (options_.dimension <= 0)
        throw InputError("embedding dimension must be positive");
}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const
{
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw InputError("cannot embed blank text");

    nlohmann::json body = {{"model", options_.model}, {"input", {options_.prefix + std::string(text)}}};
    http::Request req;
    req.method = "POST";
    req.url = options_.endpoint;
    req.body = body.dump();
    req.content_type = "application/json";
    req.timeout = options_.timeout;
    if (!options_.api_key.empty())
        req.headers["Authorization"] = "Bearer " + options_.api_key;

    auto const res = http::send(req);
    if (res.status >= 500)
        throw TransportError("embedding service returned " + std::to_string(res.status));
    if (res.status != 200)
        throw ProtocolError("embedding service returned " + std::to_string(res.status) + ": " + res.body);

    try {
        auto const wire = nlohmann::json::parse(res.body);
        auto const& values = wire.at("data").at(0).at("embedding");
        if (static_cast<Eigen::Index>(values.size()) != options_.dimension)
            throw ProtocolError("embedding service returned dimension " + std::to_string(values.size()));
        Eigen::VectorXd v(options_.dimension);
        for (Eigen::Index i = 0; i < options_.dimension; ++i)
            v[i] = values[static_cast<std::size_t>(i)].get<double>();
        return EmbeddingVector(std::move(v));
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed embedding payload: ") + e.what());
    }
}

} // namespace kgqa
