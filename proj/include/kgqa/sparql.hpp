// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kgqa {

enum class QueryForm { select, ask, construct, describe, unknown };

std::string_view to_string(QueryForm form);

/// First form keyword after any PREFIX/BASE declarations, case-insensitive.
QueryForm classify_form(std::string_view query);

struct SparqlQuery {
    std::string text;
    QueryForm form = QueryForm::unknown;

    explicit SparqlQuery(std::string query_text);
};

struct RdfTerm {
    std::string type; ///< "uri", "literal", "typed-literal" or "bnode"
    std::string value;
    std::string datatype;
    std::string lang;
};

/// Comparable form of an RDF term: IRIs verbatim; literals NFC-normalized with
/// the language tag dropped; xsd numerics in shortest canonical form; xsd
/// date/dateTime reduced to YYYY-MM-DD. Unparseable values are kept verbatim and
/// a note is appended to `diagnostics` when given.
std::string canonicalize_value(const RdfTerm& term, std::vector<std::string>* diagnostics = nullptr);

/// Unicode NFC normalization of UTF-8 text.
std::string nfc(std::string_view text);

/// One result row: (variable, canonical value) pairs sorted by variable name.
using AnswerRow = std::vector<std::pair<std::string, std::string>>;

struct AnswerSet {
    enum class Kind { bindings, boolean, error, empty };

    Kind kind = Kind::empty;
    std::set<AnswerRow> rows;
    std::optional<bool> boolean_value;
    std::optional<std::string> error_text;
    std::vector<std::string> diagnostics;

    static AnswerSet from_boolean(bool value);
    static AnswerSet from_error(std::string text);
    static AnswerSet from_rows(std::set<AnswerRow> rows);

    bool operator==(const AnswerSet& other) const
    {
        return kind == other.kind && rows == other.rows && boolean_value == other.boolean_value
            && error_text == other.error_text;
    }
};

std::string_view to_string(AnswerSet::Kind kind);

/// SPARQL 1.1 results JSON -> AnswerSet. Never throws: unusable payloads come
/// back as Kind::error. CONSTRUCT/DESCRIBE bodies that are not results JSON
/// become a single raw-text row.
AnswerSet parse_results(std::string_view raw, QueryForm form);

/// Elements used for set comparison. A row maps to its sorted value multiset,
/// so variable names never matter; booleans map to a marker disjoint from any
/// row. Error and empty sets map to the empty set.
std::set<std::string> comparison_keys(const AnswerSet& answers);

struct SparqlResponse {
    int status = 0;
    std::string body;
};

class Triplestore {
public:
    virtual ~Triplestore() = default;
    /// Throws TimeoutError, TransportError, or HttpStatusError (4xx/5xx, body kept).
    virtual SparqlResponse execute(const SparqlQuery& query) = 0;
};

struct HttpTriplestoreOptions {
    std::string endpoint = "https://query.wikidata.org/bigdata/namespace/wdq/sparql";
    std::chrono::milliseconds timeout{60'000};
    bool use_post = true;
    std::string user_agent = "kgqa-agent/1.0";
};

class HttpTriplestore final : public Triplestore {
public:
    explicit HttpTriplestore(HttpTriplestoreOptions options);
    SparqlResponse execute(const SparqlQuery& query) override;

private:
    HttpTriplestoreOptions options_;
};

/// Canned responses keyed by exact query text, with a default handler.
class MockTriplestore final : public Triplestore {
public:
    using Handler = std::function<SparqlResponse(const std::string& query)>;

    MockTriplestore();

    void on(std::string query, SparqlResponse response);
    void on_default(Handler handler);

    SparqlResponse execute(const SparqlQuery& query) override;

    std::size_t hits() const noexcept { return hits_; }
    std::vector<std::string> executed() const;

    static std::string boolean_payload(bool value);
    /// Single-variable bindings payload with URI values.
    static std::string uri_payload(const std::string& var, const std::vector<std::string>& uris);

private:
    mutable std::mutex mutex_;
    std::map<std::string, SparqlResponse> canned_;
    Handler fallback_;
    std::atomic<std::size_t> hits_{0};
    std::vector<std::string> executed_;
};

/// Executes and parses; transport/status failures become Kind::error.
AnswerSet fetch_answers(Triplestore& store, const std::string& query);

} // namespace kgqa
