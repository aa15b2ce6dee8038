// SPDX-License-Identifier: Apache-2.0
//
// Entity and relation linking against external lookup services, exposed to the
// model as the `wikidata_el` tool.
#pragma once

#include "kgqa/llm.hpp"

#include <atomic>
#include <chrono>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgqa {

struct LinkCandidates {
    std::vector<std::string> entities;
    std::vector<std::string> relations;
    std::string language = "en";
};

/// Insertion-ordered surface form -> URI mapping.
class LinkMap {
public:
    void insert(const std::string& surface, const std::string& uri);
    const std::string* find(const std::string& surface) const;
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

    bool operator==(const LinkMap&) const = default;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

struct LinkResult {
    LinkMap linked_entities;
    LinkMap linked_relations;
    std::vector<std::string> diagnostics;
};

json to_json(const LinkResult& result);

class EntityService {
public:
    virtual ~EntityService() = default;
    /// URI of the top-ranked hit, or nullopt when there are no hits.
    virtual std::optional<std::string> lookup(const std::string& label, const std::string& language) = 0;
};

class RelationService {
public:
    virtual ~RelationService() = default;
    virtual std::optional<std::string> lookup(const std::string& label) = 0;
};

/// `action=wbsearchentities` client.
class WikidataEntityService final : public EntityService {
public:
    explicit WikidataEntityService(std::string endpoint = "https://www.wikidata.org/w/api.php",
                                   std::chrono::milliseconds timeout = std::chrono::seconds(30));
    std::optional<std::string> lookup(const std::string& label, const std::string& language) override;

    /// First hit's concepturi from a wbsearchentities response body.
    static std::optional<std::string> parse_response(const json& body);

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
};

/// Falcon 2.0 style relation linker: POST {"text": label}, ranked relations back.
class FalconRelationService final : public RelationService {
public:
    explicit FalconRelationService(std::string endpoint, std::string result_key = "relations",
                                   std::chrono::milliseconds timeout = std::chrono::seconds(30));
    std::optional<std::string> lookup(const std::string& label) override;

    /// Accepts items shaped as "uri", ["uri", "label"] or {"uri": ...}.
    static std::optional<std::string> parse_response(const json& body, const std::string& result_key);

private:
    std::string endpoint_;
    std::string result_key_;
    std::chrono::milliseconds timeout_;
};

/// In-memory services for tests and offline runs.
class MockEntityService final : public EntityService {
public:
    MockEntityService() = default;
    explicit MockEntityService(std::map<std::string, std::string> table) : table_(std::move(table)) {}

    std::optional<std::string> lookup(const std::string& label, const std::string& language) override;
    void set(std::string label, std::string uri) { table_[std::move(label)] = std::move(uri); }
    void fail_on(std::string label) { failing_.push_back(std::move(label)); }
    std::size_t calls() const noexcept { return calls_; }

private:
    std::map<std::string, std::string> table_;
    std::vector<std::string> failing_;
    std::atomic<std::size_t> calls_{0};
};

class MockRelationService final : public RelationService {
public:
    MockRelationService() = default;
    explicit MockRelationService(std::map<std::string, std::vector<std::string>> ranked) : ranked_(std::move(ranked)) {}

    std::optional<std::string> lookup(const std::string& label) override;
    void set(std::string label, std::vector<std::string> ranked_uris) { ranked_[std::move(label)] = std::move(ranked_uris); }
    std::size_t calls() const noexcept { return calls_; }

private:
    std::map<std::string, std::vector<std::string>> ranked_;
    std::atomic<std::size_t> calls_{0};
};

/// Thread-safe LRU keyed by (kind, label, language). Caches misses too.
class LookupCache {
public:
    explicit LookupCache(std::size_t capacity = 10'000);

    std::optional<std::optional<std::string>> get(const std::string& key);
    void put(const std::string& key, std::optional<std::string> value);
    std::size_t size() const;

private:
    using Entry = std::pair<std::string, std::optional<std::string>>;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<Entry> order_;
    std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

class Linker {
public:
    Linker(std::shared_ptr<EntityService> entities, std::shared_ptr<RelationService> relations,
           std::shared_ptr<LookupCache> cache = nullptr);

    /// Trimmed label lookup; throws on transport failure.
    std::optional<std::string> entity_lookup(const std::string& label, const std::string& language);
    std::optional<std::string> relation_lookup(const std::string& label);

    /// Links every candidate in input order. Empty lookups and failing
    /// lookups are omitted; failures are noted in diagnostics.
    LinkResult link(const LinkCandidates& candidates);

private:
    std::shared_ptr<EntityService> entities_;
    std::shared_ptr<RelationService> relations_;
    std::shared_ptr<LookupCache> cache_;
};

inline constexpr const char* kLinkToolName = "wikidata_el";

/// Tool definition advertised to the model.
ToolSpec link_tool_spec();

/// Tool arguments -> candidates. Accepts {"entities": [...], "relations": [...]}
/// and the single-label shorthand {"label": "..."}.
LinkCandidates candidates_from_arguments(const json& arguments, const std::string& language);

} // namespace kgqa
