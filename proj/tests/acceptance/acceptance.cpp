// SPDX-License-Identifier: Apache-2.0
//
// One PASS/FAIL line per acceptance criterion. Criterion 10 talks to live
// services and only runs with KGQA_LIVE_SMOKE=1; it never affects the exit code.

#include "scenarios.hpp"

#include "kgqa/config.hpp"
#include "kgqa/cost.hpp"
#include "kgqa/error.hpp"
#include "kgqa/evaluation.hpp"
#include "kgqa/experience_pool.hpp"
#include "kgqa/prompts.hpp"
#include "kgqa/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

using namespace kgqa;
namespace kt = kgqa::testing;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool condition, const std::string& what)
{
    if (!condition)
        throw Failure(what);
}

void expect_near(double actual, double expected, double tolerance, const std::string& what)
{
    if (!(std::abs(actual - expected) <= tolerance)) {
        std::ostringstream os;
        os.precision(12);
        os << what << ": got " << actual << ", want " << expected << " +/- " << tolerance;
        throw Failure(os.str());
    }
}

fs::path scratch_dir()
{
    auto dir = fs::temp_directory_path() / ("kgqa-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

// --- 1: cost fixtures ---------------------------------------------------------------

std::string criterion_cost()
{
    fs::path const dir = KGQA_DATA_DIR "/pricing/reference-2025-03";
    auto const usage = load_usage(dir / "usage.json");
    expect(usage.n_q == 100 && usage.n_c == 13.03 && usage.n_i == 144 && usage.n_o == 199, "usage fixture values");

    auto per100 = [&](const char* file) { return price_per_100_questions(usage, load_pricing(dir / file)); };
    expect_near(per100("gpt-3.5-turbo.json"), 0.48, 0.01, "GPT-3.5 TBP");
    expect_near(per100("gpt-4o.json"), 3.06, 0.01, "GPT-4o TBP");
    expect_near(per100("qwen-2.5-72b-instruct.json"), 4.05, 0.02, "Qwen GBP");
    expect_near(per100("llama-3.1-70b-instruct.json"), 2.01, 0.02, "Llama GBP");
    expect(format_usd(per100("gpt-3.5-turbo.json")) == "USD 0.48", "GPT-3.5 formatting");

    auto const qwen = std::get<GpuPricing>(load_pricing(dir / "qwen-2.5-72b-instruct.json"));
    auto const llama = std::get<GpuPricing>(load_pricing(dir / "llama-3.1-70b-instruct.json"));
    expect_near(gpu_hours(usage, qwen.tokens_per_second), 1.96, 0.01, "Qwen GPU hours");
    expect_near(gpu_hours(usage, llama.tokens_per_second), 0.97, 0.01, "Llama GPU hours");

    std::ostringstream os;
    os << "TBP 0.48/3.06, GBP " << format_usd(per100("qwen-2.5-72b-instruct.json")).substr(4) << "/"
       << format_usd(per100("llama-3.1-70b-instruct.json")).substr(4);
    return os.str();
}

// --- 2: F1 oracle -------------------------------------------------------------------

// An answer drawn for the oracle: a subset of a 12-element universe, a boolean,
// or nothing (empty / error).
struct Drawn {
    enum Kind { rows, boolean, empty, error } kind;
    unsigned mask = 0;
    bool value = false;
};

Drawn draw(std::mt19937_64& rng)
{
    auto const roll = rng() % 10;
    if (roll == 0) return {Drawn::empty};
    if (roll == 1) return {Drawn::error};
    if (roll == 2) return {Drawn::boolean, 0, static_cast<bool>(rng() & 1)};
    // subsets of at most 8 elements
    std::vector<unsigned> idx(12);
    std::iota(idx.begin(), idx.end(), 0u);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto const size = rng() % 9;
    unsigned mask = 0;
    for (std::size_t i = 0; i < size; ++i)
        mask |= 1u << idx[i];
    return {Drawn::rows, mask};
}

AnswerSet materialize(const Drawn& d, const std::string& var)
{
    switch (d.kind) {
    case Drawn::empty: return AnswerSet::from_rows({});
    case Drawn::error: return AnswerSet::from_error("boom");
    case Drawn::boolean: return AnswerSet::from_boolean(d.value);
    case Drawn::rows: break;
    }
    std::set<AnswerRow> rows;
    for (unsigned e = 0; e < 12; ++e)
        if (d.mask & (1u << e))
            rows.insert(AnswerRow{{var, "http://example.org/e" + std::to_string(e)}});
    return AnswerSet::from_rows(std::move(rows));
}

// Elements 0..11 are the universe, 12/13 the booleans false/true.
unsigned oracle_bits(const Drawn& d)
{
    switch (d.kind) {
    case Drawn::rows: return d.mask;
    case Drawn::boolean: return 1u << (d.value ? 13 : 12);
    default: return 0;
    }
}

std::string criterion_f1()
{
    std::mt19937_64 rng(20250317);
    for (int trial = 0; trial < 10'000; ++trial) {
        auto const g = draw(rng);
        auto const p = draw(rng);
        // variable names never matter for comparison
        auto const got = f1_score(materialize(g, "uri"), materialize(p, trial % 2 ? "x" : "uri"));

        auto const gb = oracle_bits(g);
        auto const pb = oracle_bits(p);
        int common = 0, ng = 0, np = 0;
        for (unsigned e = 0; e < 14; ++e) {
            ng += (gb >> e) & 1;
            np += (pb >> e) & 1;
            common += ((gb & pb) >> e) & 1;
        }
        double precision = 0, recall = 0, f1 = 0;
        if (ng == 0 && np == 0) {
            precision = recall = f1 = 1.0;
        } else if (ng > 0 && np > 0 && common > 0) {
            precision = static_cast<double>(common) / np;
            recall = static_cast<double>(common) / ng;
            f1 = 2 * precision * recall / (precision + recall);
            // Dice form as an algebraically independent cross-check
            expect_near(f1, 2.0 * common / (ng + np), 1e-12, "Dice identity");
        }
        if (got.precision != precision || got.recall != recall || got.f1 != f1)
            throw Failure("trial " + std::to_string(trial) + " disagrees with the oracle");
    }
    return "10000 pairs identical to the set-arithmetic oracle";
}

// --- 3: retrieval oracle ------------------------------------------------------------------

std::string criterion_retrieval()
{
    std::mt19937_64 rng(77);
    std::normal_distribution<double> normal;
    double const f1_choices[] = {1.0, 1.0 - 1e-12, 0.0, 0.5, 0.99};
    std::size_t checked = 0;

    for (int trial = 0; trial < 200; ++trial) {
        Eigen::Index const dim = trial % 2 ? 64 : 8;
        auto const n = 1 + rng() % 1000;
        ExperiencePool pool(dim, "test");
        std::vector<Eigen::VectorXd> raw;
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::VectorXd v(dim);
            // some exact duplicates to exercise the tie rule
            if (!raw.empty() && rng() % 8 == 0)
                v = raw[rng() % raw.size()];
            else
                for (Eigen::Index k = 0; k < dim; ++k)
                    v[k] = normal(rng);
            raw.push_back(v);
            ExperienceRecord r;
            r.question = "q" + std::to_string(i);
            r.language = "en";
            r.vector = EmbeddingVector(v);
            r.gold_sparql = "SELECT ?g" + std::to_string(i) + " WHERE {}";
            r.generated_sparql = "SELECT ?p" + std::to_string(i) + " WHERE {}";
            r.plan.steps = {"step"};
            r.f1 = f1_choices[rng() % 5];
            pool.add_example(std::move(r));
        }

        Eigen::VectorXd qv(dim);
        for (Eigen::Index k = 0; k < dim; ++k)
            qv[k] = normal(rng);
        EmbeddingVector const query(qv);

        // brute force: plain loops, stable sort
        std::vector<std::pair<std::size_t, double>> scored;
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0, na = 0, nb = 0;
            for (Eigen::Index k = 0; k < dim; ++k) {
                dot += raw[i][k] * qv[k];
                na += raw[i][k] * raw[i][k];
                nb += qv[k] * qv[k];
            }
            scored.emplace_back(i, dot / (std::sqrt(na) * std::sqrt(nb)));
        }
        std::stable_sort(scored.begin(), scored.end(), [](auto& a, auto& b) { return a.second > b.second; });

        auto const top = 1 + rng() % 12;
        std::vector<std::pair<std::size_t, double>> want_plans;
        for (auto const& s : scored)
            if (want_plans.size() < top && std::abs(pool.records()[s.first].f1 - 1.0) <= kSuccessTolerance)
                want_plans.push_back(s);
        auto const plans = pool.find_top_n_plans(query, top);
        expect(plans.size() == want_plans.size(), "plan count");
        for (std::size_t i = 0; i < plans.size(); ++i) {
            auto const index = static_cast<std::size_t>(plans[i].record - pool.records().data());
            expect(index == want_plans[i].first, "plan order, trial " + std::to_string(trial));
            expect_near(plans[i].similarity, want_plans[i].second, 1e-9, "plan similarity");
            expect(plans[i].record->f1 >= 1.0 - kSuccessTolerance, "plan with f1 < 1");
        }

        auto const queries = pool.find_top_n_queries(query, top, QueryExampleSource::gold);
        auto const generated = pool.find_top_n_queries(query, top, QueryExampleSource::generated);
        auto const want = std::min<std::size_t>(top, n);
        expect(queries.size() == want && generated.size() == want, "query count");
        for (std::size_t i = 0; i < want; ++i) {
            auto const& rec = pool.records()[scored[i].first];
            expect(queries[i].question == rec.question, "query order, trial " + std::to_string(trial));
            expect(queries[i].sparql == rec.gold_sparql, "gold query text");
            expect(generated[i].sparql == rec.generated_sparql, "generated query text");
            expect_near(queries[i].similarity, scored[i].second, 1e-9, "query similarity");
        }
        checked += plans.size() + queries.size();
    }
    return "200 pools agree with brute force (" + std::to_string(checked) + " matches compared)";
}

// --- 4: orchestration ---------------------------------------------------------------

std::string criterion_orchestration()
{
    auto run = [] {
        kt::Harness h(kt::full_agent_script());
        h.store->on(kt::kDraftQuery, {200, MockTriplestore::uri_payload("uri", {kt::kHamburg})});
        auto record = h.agent->run_full(kt::kMerkelQuestion, "en", nullptr, nullptr, *h.store);
        expect(h.backend->remaining() == 0, "script not fully consumed");
        expect(h.store->hits() == 1, "triplestore executions seen by the store");
        expect(h.gateway->usage_snapshot().calls == record.usage.calls, "gateway counter vs record");
        return record;
    };
    auto const a = run();
    auto const b = run();
    expect(a == b, "records differ across runs");
    expect(to_json(a).dump() == to_json(b).dump(), "serialized records differ across runs");
    expect(a.llm_invocations == 5, "LLM invocations: " + std::to_string(a.llm_invocations));
    expect(a.usage.calls == 6, "raw completions (5 invocations + 1 tool round-trip): " + std::to_string(a.usage.calls));
    expect(a.triplestore_executions == 1, "pre-final triplestore executions");
    expect(a.feedback_used, "feedback_used");
    expect(a.intermediate_query == kt::kDraftQuery, "intermediate query");
    expect(a.final_query == kt::kFinalQuery, "final query");

    // simple agent: 1 + N for an N-step plan, no triplestore
    for (std::size_t steps : {1u, 3u, 5u}) {
        kt::Harness h(kt::simple_agent_script(steps, kt::kDraftQuery));
        auto const r = h.agent->run_simple(kt::kMerkelQuestion, "en");
        expect(r.llm_invocations == 1 + steps && r.usage.calls == static_cast<std::int64_t>(1 + steps),
               "simple agent calls for " + std::to_string(steps) + " steps");
        expect(r.triplestore_executions == 0 && !r.feedback_used && h.store->hits() == 0, "simple agent store contact");
        expect(r.final_query == kt::kDraftQuery, "simple agent final query");
    }
    return "5 invocations (6 completions incl. 1 tool round-trip), 1 execution, identical records; simple = 1+N";
}

// --- 5: offline phase ---------------------------------------------------------------------

std::string criterion_offline()
{
    auto fixture = kt::four_question_training_set();
    HashingEmbedder const embedder(64);
    kt::Harness offline(fixture.script);
    auto build = build_experience_pool(*offline.agent, fixture.dataset, "en", embedder,
                                       make_answer_scorer(*fixture.store));
    expect(build.pool.size() == 4, "pool size " + std::to_string(build.pool.size()));
    std::vector<double> f1s;
    for (auto const& r : build.pool.records())
        f1s.push_back(r.f1);
    expect((f1s == std::vector<double>{1, 1, 0, 0}), "pool F1 values");

    kt::Harness online(kt::simple_agent_script(1, "SELECT ?uri WHERE { wd:Q7259 wdt:P26 ?uri }"));
    online.backend->script({scripted_text("SELECT ?uri WHERE { wd:Q7259 wdt:P26 ?uri }")});
    auto const record = online.agent->run_full("Who is the spouse of Ada Lovelace?", "en", &build.pool, &embedder,
                                               *online.store);
    expect(!record.final_query.empty(), "online run produced no query");
    auto const& plan_prompt = online.backend->captured_prompts().at(0).at(0).content;
    expect(plan_prompt.find(fixture.plan_markers[0]) != std::string::npos, "successful plan 1 missing");
    expect(plan_prompt.find(fixture.plan_markers[1]) != std::string::npos, "successful plan 2 missing");
    expect(plan_prompt.find(fixture.plan_markers[2]) == std::string::npos, "failed plan 3 leaked");
    expect(plan_prompt.find(fixture.plan_markers[3]) == std::string::npos, "failed plan 4 leaked");
    return "4 records with F1 {1,1,0,0}; plan prompt carries exactly the 2 successful plans";
}

// --- 6: NEL ---------------------------------------------------------------------------

std::string criterion_nel()
{
    auto entities = std::make_shared<MockEntityService>();
    auto relations = std::make_shared<MockRelationService>();
    kt::seed_nel(*entities, *relations);
    LinkCandidates const candidates{{"Angela Merkel", "Nobody In Particular"}, {"place of birth", "unheard-of relation"},
                                    "en"};

    Linker uncached(entities, relations);
    auto const plain = uncached.link(candidates);
    expect(plain.linked_entities.size() == 1, "empty entity lookups must be omitted");
    expect(plain.linked_entities.find("Angela Merkel") && *plain.linked_entities.find("Angela Merkel") == kt::kMerkel,
           "Angela Merkel -> Q567");
    expect(plain.linked_relations.size() == 1 && *plain.linked_relations.find("place of birth") == kt::kBirthPlace,
           "relation lands in linked_relations with the top-ranked URI");
    expect(!plain.linked_entities.find("place of birth"), "relation leaked into linked_entities");
    expect(!plain.linked_relations.find("Angela Merkel"), "entity leaked into linked_relations");

    auto const e0 = entities->calls(), r0 = relations->calls();
    Linker uncached_again(entities, relations);
    uncached_again.link(candidates);
    uncached_again.link(candidates);
    auto const without_cache = (entities->calls() - e0) + (relations->calls() - r0);

    auto const e1 = entities->calls(), r1 = relations->calls();
    Linker cached(entities, relations, std::make_shared<LookupCache>());
    auto const first = cached.link(candidates);
    auto const second = cached.link(candidates);
    auto const with_cache = (entities->calls() - e1) + (relations->calls() - r1);
    expect(with_cache * 2 == without_cache, "cache should halve service calls (" + std::to_string(with_cache) + " vs "
                                                + std::to_string(without_cache) + ")");
    expect(first.linked_entities == plain.linked_entities && second.linked_entities == plain.linked_entities
               && second.linked_relations == plain.linked_relations,
           "cache changed results");
    return "omission, Q567, relation routing, cache " + std::to_string(without_cache) + " -> "
        + std::to_string(with_cache) + " service calls";
}

// --- 7: prompts --------------------------------------------------------------------------

std::string criterion_prompts()
{
    auto const registry = PromptRegistry::builtin();
    auto const plan = render_prompt(*registry.resolve("en", PromptKind::plan).prompt,
                                    {{kUserQuestion, "Q?"}, {kPlanExperience, ""}});
    auto const action = render_prompt(*registry.resolve("en", PromptKind::action).prompt, {{kQueryExperience, ""}});
    expect(plan.find("come up with a simple step by step plan") != std::string::npos, "plan phrase");
    expect(action.find("'wikidata_el' for named entity linking") != std::string::npos, "action phrase");
    expect(placeholders_in(plan).empty() && placeholders_in(action).empty(), "unsubstituted placeholders");

    AgentOptions options;
    options.feedback_byte_budget = 4096;
    kt::Harness h({}, options);
    std::string response(10'000, 'x');
    for (std::size_t i = 0; i < response.size(); i += 97)
        response[i] = 'y';
    auto const feedback = h.agent->feedback_prompt("Q?", kt::kDraftQuery, response, "en");
    expect(feedback.find("This is feedback to your generated SPARQL query") != std::string::npos, "feedback phrase");
    expect(placeholders_in(feedback).empty(), "feedback placeholders");
    std::string const open = "--- Start triplestore response ---\n";
    std::string const close = "\n--- End triplestore response ---";
    auto const b = feedback.find(open);
    auto const e = feedback.find(close);
    expect(b != std::string::npos && e != std::string::npos && b < e, "feedback delimiters");
    auto const carried = feedback.substr(b + open.size(), e - b - open.size());
    std::string const marker = "\n[TRUNCATED: " + std::to_string(response.size() - 4096) + " more bytes]";
    expect(carried == response.substr(0, 4096) + marker, "feedback body is not the 4096-byte prefix plus marker");

    auto const empty = h.agent->feedback_prompt("Q?", kt::kDraftQuery, "", "en");
    expect(empty.find(open + kEmptyResultMarker + close) != std::string::npos, "empty response marker");
    return "invariant phrases verbatim, no placeholders left, feedback truncated at 4096 bytes";
}

// --- 8: persistence and loader ----------------------------------------------------------

std::string criterion_persistence()
{
    auto const dir = scratch_dir();
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    ExperiencePool pool(16, "hash:16:1");
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd v(16);
        for (int k = 0; k < 16; ++k)
            v[k] = normal(rng);
        ExperienceRecord r;
        r.question = "Frage " + std::to_string(i) + " über Köln?";
        r.language = i % 2 ? "de" : "en";
        r.vector = EmbeddingVector(v);
        r.gold_sparql = "SELECT ?x WHERE { ?x wdt:P31 wd:Q" + std::to_string(i) + " }";
        r.generated_sparql = i % 3 ? r.gold_sparql : "";
        r.plan.steps = {"link", "write"};
        r.plan.raw_text = "1. link\n2. write";
        r.chat_history = {ChatMessage::system("s"), ChatMessage::user("u"),
                          ChatMessage::assistant("", {{"c1", kLinkToolName, {{"label", "Köln"}}}}),
                          ChatMessage::tool("c1", "{}"), ChatMessage::assistant("SELECT 1")};
        r.f1 = i % 4 == 0 ? 1.0 : 0.25 * (i % 4);
        pool.add_example(std::move(r));
    }
    auto const path = dir / "pool.jsonl";
    pool.save(path);
    auto const loaded = ExperiencePool::load(path);
    expect(loaded.records() == pool.records(), "records differ after reload");
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd v(16);
        for (int k = 0; k < 16; ++k)
            v[k] = normal(rng);
        EmbeddingVector const q(v);
        auto const a = pool.find_top_n_plans(q, 5), b = loaded.find_top_n_plans(q, 5);
        expect(a.size() == b.size(), "plan retrieval size after reload");
        for (std::size_t i = 0; i < a.size(); ++i)
            expect(*a[i].record == *b[i].record && a[i].similarity == b[i].similarity, "plan retrieval after reload");
        expect(pool.find_top_n_queries(q, 5) == loaded.find_top_n_queries(q, 5), "query retrieval after reload");
    }

    auto const qald = dir / "qald.json";
    std::ofstream(qald) << kt::synthetic_qald(558).dump();
    auto const dataset = load_qald(qald, Split::test);
    expect(dataset.size() == 558, "loaded " + std::to_string(dataset.size()) + " questions");

    auto broken = kt::synthetic_qald(10);
    broken["questions"][7].erase("query");
    try {
        parse_qald(broken, Split::test);
        throw Failure("malformed dataset accepted");
    } catch (const DatasetError& e) {
        expect(e.index() == 7, "reported index " + std::to_string(e.index()));
    }
    fs::remove_all(dir);
    return "pool round-trip exact, 558 questions, malformed entry reported at index 7";
}

// --- 9: service ----------------------------------------------------------------------------

std::string criterion_service()
{
    auto script = kt::simple_agent_script(2, kt::kDraftQuery);
    script.push_back(scripted_text(kt::kFinalQuery));
    auto twice = script;
    twice.insert(twice.end(), script.begin(), script.end());

    AgentOptions options;
    options.prompt_policy = PromptPolicy::english_only;
    kt::Harness h(twice, options);
    auto embedder = std::make_shared<HashingEmbedder>(32);
    std::map<std::string, DatasetBinding> datasets{{"wikidata", {h.store, nullptr, "en"}}};
    AnsweringService service(*h.agent, embedder, datasets);
    HttpFrontend frontend(service, 1);
    auto const port = frontend.start_background();

    httplib::Client client("127.0.0.1", port);
    auto get = [&](const httplib::Params& params) {
        auto res = client.Get("/", params, httplib::Headers{});
        if (!res)
            throw Failure("request failed: " + httplib::to_string(res.error()));
        return std::make_pair(res->status, res->body);
    };
    auto const first = get({{"question", kt::kMerkelQuestion}, {"dataset", "wikidata"}});
    expect(first.first == 200, "status " + std::to_string(first.first));
    auto const body = json::parse(first.second);
    expect(body.size() == 3 && body.at("dataset") == "wikidata" && body.at("question") == kt::kMerkelQuestion
               && body.at("query") == kt::kFinalQuery,
           "body " + first.second);
    auto const second = get({{"question", kt::kMerkelQuestion}, {"dataset", "wikidata"}});
    expect(second == first, "identical requests gave different replies");
    expect(get({{"question", "x"}, {"dataset", "nope"}}).first == 404, "unknown dataset status");
    expect(get({{"dataset", "wikidata"}}).first == 422, "missing question status");
    expect(get({{"question", "x"}}).first == 422, "missing dataset status");
    frontend.stop();
    return "200 {dataset, question, query}, 404, 422, identical bodies";
}

// --- 10: live smoke ------------------------------------------------------------------------

std::string criterion_live()
{
    RunConfig config;
    apply_environment(config);
    expect(!config.llm.api_key.empty(), "no API key in the environment");
    config.nel.relation.backend = "mock"; // the relation service is not reliably reachable
    auto rt = build_runtime(config);
    auto agent = rt.make_agent();
    auto const record = agent.run_full("What is the capital of Germany?", "en", nullptr, nullptr,
                                       rt.triplestore(config.default_triplestore));
    auto const form = classify_form(record.final_query);
    expect(form == QueryForm::select || form == QueryForm::ask, "not a SELECT/ASK query: " + record.final_query);
    auto const answers = fetch_answers(rt.triplestore(config.default_triplestore), record.final_query);
    expect(answers.kind != AnswerSet::Kind::error, "endpoint rejected the query: " + answers.error_text.value_or(""));
    return "live run returned a valid " + std::string(to_string(form)) + " query";
}

} // namespace

int main()
{
    struct Criterion {
        int number;
        const char* title;
        std::function<std::string()> check;
        bool gating = true;
    };
    std::vector<Criterion> const criteria{
        {1, "cost fixtures", criterion_cost},
        {2, "F1 oracle equivalence", criterion_f1},
        {3, "retrieval oracle equivalence", criterion_retrieval},
        {4, "orchestration determinism and call accounting", criterion_orchestration},
        {5, "offline-phase correctness", criterion_offline},
        {6, "NEL guard and linking semantics", criterion_nel},
        {7, "prompt fidelity", criterion_prompts},
        {8, "persistence and loader", criterion_persistence},
        {9, "service contract", criterion_service},
        {10, "live smoke test (non-gating)", criterion_live, false},
    };

    bool const live = [] {
        auto const* v = std::getenv("KGQA_LIVE_SMOKE");
        return v && std::string(v) == "1";
    }();

    int failures = 0;
    for (auto const& c : criteria) {
        auto const start = std::chrono::steady_clock::now();
        std::string status, detail;
        if (!c.gating && !live) {
            status = "SKIP";
            detail = "set KGQA_LIVE_SMOKE=1 to run";
        } else {
            try {
                detail = c.check();
                status = "PASS";
            } catch (const std::exception& e) {
                status = "FAIL";
                detail = e.what();
                if (c.gating)
                    ++failures;
            }
        }
        auto const ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        std::cout << status << " [" << c.number << "] " << c.title << " -- " << detail << " (" << static_cast<long>(ms)
                  << " ms)" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
