// SPDX-License-Identifier: Apache-2.0
#include "kgqa/experience_pool.hpp"

#include "kgqa/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace kgqa {

ExperiencePool::ExperiencePool(Eigen::Index dimension, std::string embedder_id)
    : dimension_(dimension), embedder_id_(std::move(embedder_id))
{
    if (dimension_ <= 0)
        throw InputError("pool dimension must be positive");
}

void ExperiencePool::add_example(ExperienceRecord record)
{
    if (record.vector.dimension() != dimension_)
        throw InputError("record dimension " + std::to_string(record.vector.dimension()) + " does not match pool dimension "
                         + std::to_string(dimension_));
    if (!(record.f1 >= 0.0 && record.f1 <= 1.0))
        throw InputError("record f1 must lie in [0, 1]");
    if (record.gold_sparql.empty())
        throw InputError("record needs a gold query");
    records_.push_back(std::move(record));
}

std::vector<std::pair<std::size_t, double>>
ExperiencePool::rank(const EmbeddingVector& query, std::size_t n,
                     const std::function<bool(const ExperienceRecord&)>& eligible) const
{
    if (n == 0)
        throw InputError("top-n retrieval needs n >= 1");
    if (query.dimension() != dimension_)
        throw InputError("query dimension does not match pool dimension");

    std::vector<std::pair<std::size_t, double>> scored;
    for (std::size_t i = 0; i < records_.size(); ++i)
        if (eligible(records_[i]))
            scored.emplace_back(i, cosine_similarity(query, records_[i].vector));

    auto const keep = std::min(n, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                      [](const auto& a, const auto& b) {
                          if (a.second != b.second)
                              return a.second > b.second;
                          return a.first < b.first;
                      });
    scored.resize(keep);
    return scored;
}

std::vector<PlanMatch> ExperiencePool::find_top_n_plans(const EmbeddingVector& query, std::size_t n,
                                                         const std::optional<std::string>& language) const
{
    auto ranked = rank(query, n, [&](const ExperienceRecord& r) {
        return std::abs(r.f1 - 1.0) <= kSuccessTolerance && (!language || r.language == *language);
    });
    std::vector<PlanMatch> out;
    out.reserve(ranked.size());
    for (auto [index, score] : ranked)
        out.push_back({&records_[index], score});
    return out;
}

std::vector<QueryMatch> ExperiencePool::find_top_n_queries(const EmbeddingVector& query, std::size_t n,
                                                           QueryExampleSource source,
                                                           const std::optional<std::string>& language) const
{
    auto ranked = rank(query, n, [&](const ExperienceRecord& r) {
        if (language && r.language != *language)
            return false;
        return source == QueryExampleSource::gold || !r.generated_sparql.empty();
    });
    std::vector<QueryMatch> out;
    out.reserve(ranked.size());
    for (auto [index, score] : ranked) {
        const auto& r = records_[index];
        out.push_back({r.question, source == QueryExampleSource::gold ? r.gold_sparql : r.generated_sparql, score});
    }
    return out;
}

json to_json(const ExperienceRecord& record)
{
    json history = json::array();
    for (const auto& m : record.chat_history)
        history.push_back(to_wire(m));
    const auto& v = record.vector.values();
    return {{"question", record.question},
            {"language", record.language},
            {"vector", std::vector<double>(v.data(), v.data() + v.size())},
            {"gold_sparql", record.gold_sparql},
            {"generated_sparql", record.generated_sparql},
            {"plan", {{"steps", record.plan.steps}, {"raw_text", record.plan.raw_text}}},
            {"chat_history", std::move(history)},
            {"f1", record.f1}};
}

ExperienceRecord record_from_json(const json& line)
{
    ExperienceRecord r;
    r.question = line.at("question").get<std::string>();
    r.language = line.at("language").get<std::string>();
    auto const values = line.at("vector").get<std::vector<double>>();
    r.vector = EmbeddingVector(Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
    r.gold_sparql = line.at("gold_sparql").get<std::string>();
    r.generated_sparql = line.at("generated_sparql").get<std::string>();
    r.plan.steps = line.at("plan").at("steps").get<std::vector<std::string>>();
    r.plan.raw_text = line.at("plan").at("raw_text").get<std::string>();
    for (const auto& m : line.at("chat_history"))
        r.chat_history.push_back(message_from_wire(m));
    r.f1 = line.at("f1").get<double>();
    return r;
}

void ExperiencePool::save(const std::filesystem::path& path) const
{
    auto const tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open " + tmp.string() + " for writing");
        out << json{{"format_version", kFormatVersion}, {"dimension", dimension_}, {"embedder_id", embedder_id_}}.dump()
            << '\n';
        for (const auto& r : records_)
            out << to_json(r).dump() << '\n';
        out.flush();
        if (!out)
            throw IoError("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot move pool into place at " + path.string() + ": " + ec.message());
}

ExperiencePool ExperiencePool::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open pool file " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw IoError("pool file " + path.string() + " is empty");

    json header;
    try {
        header = json::parse(line);
    } catch (const json::parse_error& e) {
        throw IoError("pool header is not JSON: " + std::string(e.what()));
    }
    if (!header.is_object() || !header.contains("format_version"))
        throw VersionError("pool file has no format_version header");
    if (header["format_version"] != kFormatVersion)
        throw VersionError("unsupported pool format_version " + header["format_version"].dump());

    ExperiencePool pool(header.at("dimension").get<Eigen::Index>(), header.value("embedder_id", ""));
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        try {
            pool.add_example(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw IoError("pool line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return pool;
}

} // namespace kgqa
