// SPDX-License-Identifier: Apache-2.0
#include "kgqa/sparql.hpp"

#include "kgqa/error.hpp"
#include "kgqa/http.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <regex>

namespace kgqa {

using json = nlohmann::json;

std::string_view to_string(QueryForm form)
{
    switch (form) {
    case QueryForm::select: return "SELECT";
    case QueryForm::ask: return "ASK";
    case QueryForm::construct: return "CONSTRUCT";
    case QueryForm::describe: return "DESCRIBE";
    case QueryForm::unknown: return "UNKNOWN";
    }
    return "UNKNOWN";
}

namespace {

std::string upper(std::string_view s)
{
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

bool is_word(unsigned char c) { return std::isalnum(c) || c == '_'; }

} // namespace

QueryForm classify_form(std::string_view query)
{
    // Walk word tokens, skipping comments, IRIs, and prologue declarations.
    std::size_t i = 0;
    auto const n = query.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(query[i]);
        if (c == '#') {
            while (i < n && query[i] != '\n')
                ++i;
            continue;
        }
        if (c == '<') {
            while (i < n && query[i] != '>')
                ++i;
            ++i;
            continue;
        }
        if (!is_word(c)) {
            ++i;
            continue;
        }
        auto start = i;
        while (i < n && (is_word(static_cast<unsigned char>(query[i])) || query[i] == ':' || query[i] == '-'))
            ++i;
        auto const word = upper(query.substr(start, i - start));
        if (word == "SELECT") return QueryForm::select;
        if (word == "ASK") return QueryForm::ask;
        if (word == "CONSTRUCT") return QueryForm::construct;
        if (word == "DESCRIBE") return QueryForm::describe;
        if (word == "PREFIX" || word == "BASE" || word.back() == ':')
            continue;
        return QueryForm::unknown;
    }
    return QueryForm::unknown;
}

SparqlQuery::SparqlQuery(std::string query_text)
    : text(std::move(query_text)), form(classify_form(text))
{
}

std::string nfc(std::string_view text)
{
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status))
        return std::string(text);
    auto const source = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    if (normalizer->isNormalized(source, status) && U_SUCCESS(status))
        return std::string(text);
    status = U_ZERO_ERROR;
    auto const normalized = normalizer->normalize(source, status);
    if (U_FAILURE(status))
        return std::string(text);
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

namespace {

constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema#";

std::string_view xsd_local(std::string_view datatype)
{
    if (datatype.starts_with(kXsd))
        return datatype.substr(kXsd.size());
    if (datatype.starts_with("xsd:"))
        return datatype.substr(4);
    return {};
}

bool is_integer_type(std::string_view t)
{
    static const std::set<std::string_view> names = {
        "integer", "int", "long", "short", "byte", "nonNegativeInteger", "positiveInteger", "negativeInteger",
        "nonPositiveInteger", "unsignedInt", "unsignedLong", "unsignedShort", "unsignedByte"};
    return names.contains(t);
}

// Exact decimal normalization: sign, no leading zeros, no trailing fraction zeros.
std::optional<std::string> canonical_decimal(std::string_view s)
{
    static const std::regex pattern(R"(^\s*([+-]?)(\d*)(?:\.(\d*))?\s*$)");
    std::cmatch m;
    if (!std::regex_match(s.begin(), s.end(), m, pattern))
        return std::nullopt;
    std::string integral = m[2].str();
    std::string fraction = m[3].matched ? m[3].str() : std::string();
    if (integral.empty() && fraction.empty())
        return std::nullopt;
    integral.erase(0, std::min(integral.find_first_not_of('0'), integral.size()));
    auto const last = fraction.find_last_not_of('0');
    fraction.erase(last == std::string::npos ? 0 : last + 1);
    if (integral.empty())
        integral = "0";
    std::string out = integral;
    if (!fraction.empty())
        out += "." + fraction;
    if (m[1].str() == "-" && out != "0")
        out.insert(out.begin(), '-');
    return out;
}

std::optional<std::string> canonical_double(std::string_view s)
{
    std::string text(s);
    text.erase(0, std::min(text.find_first_not_of(" \t"), text.size()));
    if (!text.empty() && text.front() == '+')
        text.erase(0, 1);
    if (text == "INF") return "INF";
    if (text == "-INF") return "-INF";
    if (text == "NaN") return "NaN";
    double value = 0.0;
    auto const* first = text.data();
    auto const* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value))
        return std::nullopt;
    if (value == 0.0)
        return "0";
    if (std::abs(value) < 1e15 && std::floor(value) == value)
        return std::to_string(static_cast<long long>(value));
    char buffer[64];
    auto res = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, res.ptr);
}

std::optional<std::string> canonical_date(std::string_view s)
{
    static const std::regex pattern(
        R"(^\s*(-?\d{4,})-(\d{2})-(\d{2})(?:T(\d{2}):(\d{2}):(\d{2})(?:\.\d+)?)?(Z|[+-]\d{2}:\d{2})?\s*$)");
    std::cmatch m;
    if (!std::regex_match(s.begin(), s.end(), m, pattern))
        return std::nullopt;
    int const month = std::stoi(m[2].str());
    int const day = std::stoi(m[3].str());
    // Wikidata encodes year precision with 00 month/day; keep those as given.
    if (month > 12 || day > 31)
        return std::nullopt;
    if (m[4].matched && (std::stoi(m[4].str()) > 24 || std::stoi(m[5].str()) > 59 || std::stoi(m[6].str()) > 60))
        return std::nullopt;
    return m[1].str() + "-" + m[2].str() + "-" + m[3].str();
}

} // namespace

std::string canonicalize_value(const RdfTerm& term, std::vector<std::string>* diagnostics)
{
    if (term.type == "uri" || term.type == "bnode")
        return term.value;

    auto const local = xsd_local(term.datatype);
    std::optional<std::string> canonical;
    bool typed = true;
    if (is_integer_type(local) || local == "decimal")
        canonical = canonical_decimal(term.value);
    else if (local == "double" || local == "float")
        canonical = canonical_double(term.value);
    else if (local == "date" || local == "dateTime" || local == "dateTimeStamp")
        canonical = canonical_date(term.value);
    else if (local == "boolean") {
        if (term.value == "true" || term.value == "1")
            canonical = "true";
        else if (term.value == "false" || term.value == "0")
            canonical = "false";
    } else
        typed = false;

    if (canonical)
        return *canonical;
    if (typed && diagnostics)
        diagnostics->push_back("cannot canonicalize '" + term.value + "' as xsd:" + std::string(local));
    return nfc(term.value);
}

AnswerSet AnswerSet::from_boolean(bool value)
{
    AnswerSet a;
    a.kind = Kind::boolean;
    a.boolean_value = value;
    return a;
}

AnswerSet AnswerSet::from_error(std::string text)
{
    AnswerSet a;
    a.kind = Kind::error;
    a.error_text = std::move(text);
    return a;
}

AnswerSet AnswerSet::from_rows(std::set<AnswerRow> rows)
{
    AnswerSet a;
    a.kind = rows.empty() ? Kind::empty : Kind::bindings;
    a.rows = std::move(rows);
    return a;
}

std::string_view to_string(AnswerSet::Kind kind)
{
    switch (kind) {
    case AnswerSet::Kind::bindings: return "bindings";
    case AnswerSet::Kind::boolean: return "boolean";
    case AnswerSet::Kind::error: return "error";
    case AnswerSet::Kind::empty: return "empty";
    }
    return "error";
}

AnswerSet parse_results(std::string_view raw, QueryForm form)
{
    json doc;
    try {
        doc = json::parse(raw);
    } catch (const json::parse_error& e) {
        if ((form == QueryForm::construct || form == QueryForm::describe) && !raw.empty())
            return AnswerSet::from_rows({AnswerRow{{"__raw__", std::string(raw)}}});
        return AnswerSet::from_error(std::string("response is not JSON: ") + e.what());
    }
    if (!doc.is_object())
        return AnswerSet::from_error("results document is not a JSON object");

    if (auto b = doc.find("boolean"); b != doc.end()) {
        if (!b->is_boolean())
            return AnswerSet::from_error("'boolean' is not a JSON boolean");
        return AnswerSet::from_boolean(b->get<bool>());
    }

    auto results = doc.find("results");
    if (results == doc.end() || !results->is_object() || !results->contains("bindings")
        || !(*results)["bindings"].is_array())
        return AnswerSet::from_error("results document has neither 'boolean' nor 'results.bindings'");

    std::set<AnswerRow> rows;
    std::vector<std::string> diagnostics;
    for (const auto& binding : (*results)["bindings"]) {
        if (!binding.is_object())
            return AnswerSet::from_error("binding is not an object");
        AnswerRow row;
        for (const auto& [var, term] : binding.items()) {
            if (!term.is_object() || !term.contains("type") || !term.contains("value"))
                return AnswerSet::from_error("binding for '" + var + "' lacks type or value");
            RdfTerm t{term["type"].get<std::string>(), term["value"].get<std::string>(), term.value("datatype", ""),
                      term.value("xml:lang", "")};
            row.emplace_back(var, canonicalize_value(t, &diagnostics));
        }
        std::sort(row.begin(), row.end());
        if (!row.empty())
            rows.insert(std::move(row));
    }
    auto set = AnswerSet::from_rows(std::move(rows));
    set.diagnostics = std::move(diagnostics);
    return set;
}

std::set<std::string> comparison_keys(const AnswerSet& answers)
{
    std::set<std::string> keys;
    switch (answers.kind) {
    case AnswerSet::Kind::boolean:
        keys.insert(std::string("\x01") + "boolean:" + (*answers.boolean_value ? "true" : "false"));
        break;
    case AnswerSet::Kind::bindings:
        for (const auto& row : answers.rows) {
            std::vector<std::string> values;
            for (const auto& [var, value] : row)
                values.push_back(value);
            std::sort(values.begin(), values.end());
            std::string key;
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (i)
                    key += '\x1f';
                key += values[i];
            }
            keys.insert(std::move(key));
        }
        break;
    case AnswerSet::Kind::error:
    case AnswerSet::Kind::empty:
        break;
    }
    return keys;
}

// --- HTTP triplestore ------------------------------------------------------------

HttpTriplestore::HttpTriplestore(HttpTriplestoreOptions options)
    : options_(std::move(options))
{
    if (options_.endpoint.empty())
        throw InputError("triplestore endpoint is not configured");
}

SparqlResponse HttpTriplestore::execute(const SparqlQuery& query)
{
    if (query.text.empty())
        throw InputError("cannot execute an empty query");
    http::Request req;
    req.url = options_.endpoint;
    req.timeout = options_.timeout;
    req.headers["Accept"] = "application/sparql-results+json";
    req.headers["User-Agent"] = options_.user_agent;
    if (options_.use_post) {
        req.method = "POST";
        req.body = "query=" + [&] {
            std::string out;
            for (unsigned char c : query.text) {
                if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
                    out.push_back(static_cast<char>(c));
                } else {
                    char buf[4];
                    std::snprintf(buf, sizeof(buf), "%%%02X", c);
                    out += buf;
                }
            }
            return out;
        }();
        req.content_type = "application/x-www-form-urlencoded";
    } else {
        req.query = {{"query", query.text}};
    }
    auto res = http::send(req);
    if (res.status >= 400)
        throw HttpStatusError(res.status, res.body);
    if ((query.form == QueryForm::select || query.form == QueryForm::ask) && !json::accept(res.body))
        throw ProtocolError("triplestore returned a non-JSON body for a " + std::string(to_string(query.form)) + " query");
    return {res.status, std::move(res.body)};
}

// --- mock ---------------------------------------------------------------------

MockTriplestore::MockTriplestore()
    : fallback_([](const std::string&) { return SparqlResponse{200, R"({"head":{"vars":[]},"results":{"bindings":[]}})"}; })
{
}

void MockTriplestore::on(std::string query, SparqlResponse response)
{
    std::lock_guard lock(mutex_);
    canned_[std::move(query)] = std::move(response);
}

void MockTriplestore::on_default(Handler handler)
{
    std::lock_guard lock(mutex_);
    fallback_ = std::move(handler);
}

SparqlResponse MockTriplestore::execute(const SparqlQuery& query)
{
    ++hits_;
    SparqlResponse response;
    {
        std::lock_guard lock(mutex_);
        executed_.push_back(query.text);
        if (auto it = canned_.find(query.text); it != canned_.end())
            response = it->second;
        else
            response = fallback_(query.text);
    }
    if (response.status >= 400)
        throw HttpStatusError(response.status, response.body);
    return response;
}

std::vector<std::string> MockTriplestore::executed() const
{
    std::lock_guard lock(mutex_);
    return executed_;
}

std::string MockTriplestore::boolean_payload(bool value)
{
    return json{{"head", json::object()}, {"boolean", value}}.dump();
}

std::string MockTriplestore::uri_payload(const std::string& var, const std::vector<std::string>& uris)
{
    json bindings = json::array();
    for (const auto& u : uris)
        bindings.push_back({{var, {{"type", "uri"}, {"value", u}}}});
    return json{{"head", {{"vars", {var}}}}, {"results", {{"bindings", bindings}}}}.dump();
}

AnswerSet fetch_answers(Triplestore& store, const std::string& query)
{
    if (query.empty())
        return AnswerSet::from_error("empty query");
    SparqlQuery q(query);
    try {
        auto const response = store.execute(q);
        return parse_results(response.body, q.form);
    } catch (const Error& e) {
        return AnswerSet::from_error(e.what());
    }
}

} // namespace kgqa
