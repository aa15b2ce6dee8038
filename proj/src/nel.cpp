// SPDX-License-Identifier: Apache-2.0
#include "kgqa/nel.hpp"

#include "kgqa/error.hpp"
#include "kgqa/http.hpp"

#include <algorithm>

namespace kgqa {

namespace {

std::string trim(const std::string& s)
{
    auto const b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    auto const e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_absolute_iri(const std::string& uri)
{
    auto const colon = uri.find(':');
    if (colon == std::string::npos || colon == 0)
        return false;
    return std::all_of(uri.begin(), uri.begin() + static_cast<std::ptrdiff_t>(colon), [](unsigned char c) {
        return std::isalnum(c) || c == '+' || c == '-' || c == '.';
    }) && std::isalpha(static_cast<unsigned char>(uri[0]));
}

} // namespace

void LinkMap::insert(const std::string& surface, const std::string& uri)
{
    for (auto& [key, value] : entries_)
        if (key == surface) {
            value = uri;
            return;
        }
    entries_.emplace_back(surface, uri);
}

const std::string* LinkMap::find(const std::string& surface) const
{
    for (const auto& [key, value] : entries_)
        if (key == surface)
            return &value;
    return nullptr;
}

json to_json(const LinkResult& result)
{
    auto as_object = [](const LinkMap& map) {
        json out = json::object();
        for (const auto& [k, v] : map.entries())
            out[k] = v;
        return out;
    };
    json out = {{"linked_entities", as_object(result.linked_entities)},
                {"linked_relations", as_object(result.linked_relations)}};
    if (!result.diagnostics.empty())
        out["errors"] = result.diagnostics;
    return out;
}

// --- services -------------------------------------------------------------

WikidataEntityService::WikidataEntityService(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout)
{
}

std::optional<std::string> WikidataEntityService::parse_response(const json& body)
{
    if (!body.is_object())
        throw ProtocolError("wbsearchentities response is not an object");
    if (body.contains("error"))
        throw ProtocolError("wbsearchentities error: " + body["error"].dump());
    auto search = body.find("search");
    if (search == body.end() || !search->is_array())
        throw ProtocolError("wbsearchentities response has no search array");
    for (const auto& hit : *search) {
        if (auto uri = hit.find("concepturi"); uri != hit.end() && uri->is_string() && !uri->get<std::string>().empty())
            return uri->get<std::string>();
        if (auto id = hit.find("id"); id != hit.end() && id->is_string())
            return "http://www.wikidata.org/entity/" + id->get<std::string>();
    }
    return std::nullopt;
}

std::optional<std::string> WikidataEntityService::lookup(const std::string& label, const std::string& language)
{
    http::Request req;
    req.url = endpoint_;
    req.timeout = timeout_;
    req.query = {{"action", "wbsearchentities"},
                 {"search", label},
                 {"language", language.empty() ? "en" : language},
                 {"uselang", language.empty() ? "en" : language},
                 {"format", "json"},
                 {"limit", "1"}};
    req.headers["User-Agent"] = "kgqa-agent/1.0";
    auto const res = http::send(req);
    if (res.status >= 500 || res.status == 429)
        throw TransportError("entity service returned " + std::to_string(res.status));
    if (res.status != 200)
        throw ProtocolError("entity service returned " + std::to_string(res.status));
    try {
        return parse_response(json::parse(res.body));
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed entity service payload: ") + e.what());
    }
}

FalconRelationService::FalconRelationService(std::string endpoint, std::string result_key,
                                             std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), result_key_(std::move(result_key)), timeout_(timeout)
{
}

std::optional<std::string> FalconRelationService::parse_response(const json& body, const std::string& result_key)
{
    auto list = body.find(result_key);
    if (list == body.end() || !list->is_array())
        throw ProtocolError("relation service response has no '" + result_key + "' array");
    for (const auto& item : *list) {
        if (item.is_string() && !item.get<std::string>().empty())
            return item.get<std::string>();
        if (item.is_array() && !item.empty() && item[0].is_string())
            return item[0].get<std::string>();
        if (item.is_object() && item.contains("uri") && item["uri"].is_string())
            return item["uri"].get<std::string>();
    }
    return std::nullopt;
}

std::optional<std::string> FalconRelationService::lookup(const std::string& label)
{
    http::Request req;
    req.method = "POST";
    req.url = endpoint_;
    req.timeout = timeout_;
    req.body = json{{"text", label}}.dump();
    req.content_type = "application/json";
    auto const res = http::send(req);
    if (res.status >= 500 || res.status == 429)
        throw TransportError("relation service returned " + std::to_string(res.status));
    if (res.status != 200)
        throw ProtocolError("relation service returned " + std::to_string(res.status));
    try {
        return parse_response(json::parse(res.body), result_key_);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed relation service payload: ") + e.what());
    }
}

std::optional<std::string> MockEntityService::lookup(const std::string& label, const std::string&)
{
    ++calls_;
    if (std::find(failing_.begin(), failing_.end(), label) != failing_.end())
        throw TransportError("mock entity service failure for '" + label + "'");
    if (auto it = table_.find(label); it != table_.end())
        return it->second;
    return std::nullopt;
}

std::optional<std::string> MockRelationService::lookup(const std::string& label)
{
    ++calls_;
    if (auto it = ranked_.find(label); it != ranked_.end() && !it->second.empty())
        return it->second.front();
    return std::nullopt;
}

// --- cache ------------------------------------------------------------------

LookupCache::LookupCache(std::size_t capacity)
    : capacity_(std::max<std::size_t>(capacity, 1))
{
}

std::optional<std::optional<std::string>> LookupCache::get(const std::string& key)
{
    std::lock_guard lock(mutex_);
    auto it = index_.find(key);
    if (it == index_.end())
        return std::nullopt;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->second;
}

void LookupCache::put(const std::string& key, std::optional<std::string> value)
{
    std::lock_guard lock(mutex_);
    if (auto it = index_.find(key); it != index_.end()) {
        it->second->second = std::move(value);
        order_.splice(order_.begin(), order_, it->second);
        return;
    }
    order_.emplace_front(key, std::move(value));
    index_[key] = order_.begin();
    if (order_.size() > capacity_) {
        index_.erase(order_.back().first);
        order_.pop_back();
    }
}

std::size_t LookupCache::size() const
{
    std::lock_guard lock(mutex_);
    return order_.size();
}

// --- linker -------------------------------------------------------------------

Linker::Linker(std::shared_ptr<EntityService> entities, std::shared_ptr<RelationService> relations,
               std::shared_ptr<LookupCache> cache)
    : entities_(std::move(entities)), relations_(std::move(relations)), cache_(std::move(cache))
{
    if (!entities_ || !relations_)
        throw InputError("linker needs both an entity and a relation service");
}

std::optional<std::string> Linker::entity_lookup(const std::string& label, const std::string& language)
{
    auto const clean = trim(label);
    if (clean.empty())
        throw InputError("entity label is blank");
    auto const key = "e\x1f" + clean + "\x1f" + language;
    if (cache_)
        if (auto hit = cache_->get(key))
            return *hit;
    auto uri = entities_->lookup(clean, language);
    if (uri && uri->empty())
        uri.reset();
    if (cache_)
        cache_->put(key, uri);
    return uri;
}

std::optional<std::string> Linker::relation_lookup(const std::string& label)
{
    auto const clean = trim(label);
    if (clean.empty())
        throw InputError("relation label is blank");
    auto const key = "r\x1f" + clean;
    if (cache_)
        if (auto hit = cache_->get(key))
            return *hit;
    auto uri = relations_->lookup(clean);
    if (uri && uri->empty())
        uri.reset();
    if (cache_)
        cache_->put(key, uri);
    return uri;
}

LinkResult Linker::link(const LinkCandidates& candidates)
{
    LinkResult result;
    auto attempt = [&](const std::string& raw, bool entity) {
        auto const surface = trim(raw);
        if (surface.empty())
            return;
        try {
            auto uri = entity ? entity_lookup(surface, candidates.language) : relation_lookup(surface);
            if (!uri)
                return;
            if (!is_absolute_iri(*uri)) {
                result.diagnostics.push_back("ignoring non-IRI link for '" + surface + "': " + *uri);
                return;
            }
            (entity ? result.linked_entities : result.linked_relations).insert(surface, *uri);
        } catch (const Error& e) {
            result.diagnostics.push_back(std::string(entity ? "entity" : "relation") + " lookup failed for '"
                                         + surface + "': " + e.what());
        }
    };
    for (const auto& e : candidates.entities)
        attempt(e, true);
    for (const auto& r : candidates.relations)
        attempt(r, false);
    return result;
}

ToolSpec link_tool_spec()
{
    json string_list = {{"type", "array"}, {"items", {{"type", "string"}}}};
    return {kLinkToolName,
            "Named entity and relation linking for the Wikidata KG. Maps surface forms such as "
            "\"Person name\" or \"is child of\" to URIs.",
            {{"type", "object"},
             {"properties",
              {{"entities", string_list}, {"relations", string_list}, {"label", {{"type", "string"}}}}},
             {"additionalProperties", false}}};
}

LinkCandidates candidates_from_arguments(const json& arguments, const std::string& language)
{
    LinkCandidates c;
    c.language = language;
    if (auto e = arguments.find("entities"); e != arguments.end())
        c.entities = e->get<std::vector<std::string>>();
    if (auto r = arguments.find("relations"); r != arguments.end())
        c.relations = r->get<std::vector<std::string>>();
    if (auto l = arguments.find("label"); l != arguments.end())
        c.entities.push_back(l->get<std::string>());
    return c;
}

} // namespace kgqa
