// SPDX-License-Identifier: Apache-2.0
//
// Non-parametric agent memory: one record per attempted training question,
// retrieved by question-embedding similarity.
#pragma once

#include "kgqa/embeddings.hpp"
#include "kgqa/llm.hpp"
#include "kgqa/plan.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace kgqa {

struct ExperienceRecord {
    std::string question;
    std::string language;
    EmbeddingVector vector;
    std::string gold_sparql;
    std::string generated_sparql;
    Plan plan;
    std::vector<ChatMessage> chat_history;
    double f1 = 0.0;

    bool operator==(const ExperienceRecord&) const = default;
};

/// Which query text find_top_n_queries hands back as the in-context example.
enum class QueryExampleSource { gold, generated };

struct RetrievalOptions {
    std::size_t top_n_plans = 3;
    std::size_t top_n_queries = 3;
    QueryExampleSource query_source = QueryExampleSource::gold;
    /// When set, only records in this language are eligible.
    std::optional<std::string> language;
};

struct PlanMatch {
    const ExperienceRecord* record;
    double similarity;
};

struct QueryMatch {
    std::string question;
    std::string sparql;
    double similarity;

    bool operator==(const QueryMatch&) const = default;
};

/// F1 values within this distance of 1 count as successful.
inline constexpr double kSuccessTolerance = 1e-9;

class ExperiencePool {
public:
    static constexpr int kFormatVersion = 1;

    explicit ExperiencePool(Eigen::Index dimension, std::string embedder_id = {});

    Eigen::Index dimension() const noexcept { return dimension_; }
    const std::string& embedder_id() const noexcept { return embedder_id_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::vector<ExperienceRecord>& records() const noexcept { return records_; }

    /// Appends; never overwrites an earlier record for the same question.
    void add_example(ExperienceRecord record);

    /// Top-n successful (f1 = 1) records by cosine similarity, descending;
    /// equal scores keep insertion order.
    std::vector<PlanMatch> find_top_n_plans(const EmbeddingVector& query, std::size_t n,
                                            const std::optional<std::string>& language = {}) const;

    /// Top-n records of any f1, returned as (question, query) examples.
    std::vector<QueryMatch> find_top_n_queries(const EmbeddingVector& query, std::size_t n,
                                               QueryExampleSource source = QueryExampleSource::gold,
                                               const std::optional<std::string>& language = {}) const;

    /// Versioned JSON lines: a header object, then one record per line.
    void save(const std::filesystem::path& path) const;
    static ExperiencePool load(const std::filesystem::path& path);

private:
    std::vector<std::pair<std::size_t, double>> rank(const EmbeddingVector& query, std::size_t n,
                                                     const std::function<bool(const ExperienceRecord&)>& eligible) const;

    Eigen::Index dimension_;
    std::string embedder_id_;
    std::vector<ExperienceRecord> records_;
};

json to_json(const ExperienceRecord& record);
ExperienceRecord record_from_json(const json& line);

} // namespace kgqa
