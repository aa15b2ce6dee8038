// SPDX-License-Identifier: Apache-2.0
#include "kgqa/embeddings.hpp"
#include "kgqa/error.hpp"
#include "kgqa/experience_pool.hpp"
#include "kgqa/plan.hpp"
#include "stub_server.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace kgqa;
namespace kt = kgqa::testing;
namespace fs = std::filesystem;

namespace {

EmbeddingVector vec(std::initializer_list<double> values)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values)
        v[i++] = x;
    return EmbeddingVector(v);
}

ExperienceRecord record(std::string question, EmbeddingVector v, double f1, std::string language = "en")
{
    ExperienceRecord r;
    r.question = std::move(question);
    r.language = std::move(language);
    r.vector = std::move(v);
    r.gold_sparql = "SELECT ?gold WHERE {} # " + r.question;
    r.generated_sparql = "SELECT ?gen WHERE {} # " + r.question;
    r.plan = {{"only step"}, "1. only step"};
    r.f1 = f1;
    return r;
}

fs::path temp_file(const std::string& name)
{
    return fs::temp_directory_path() / ("kgqa-unit-" + std::to_string(::getpid()) + "-" + name);
}

} // namespace

TEST_CASE("cosine similarity")
{
    // 32 / (sqrt(14) * sqrt(77))
    CHECK(cosine_similarity(vec({1, 2, 3}), vec({4, 5, 6})) == doctest::Approx(0.974631846).epsilon(1e-9));
    CHECK(cosine_similarity(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
    CHECK(cosine_similarity(vec({1, 1}), vec({-2, -2})) == doctest::Approx(-1.0));
    auto const s = cosine_similarity(vec({1e-3, 1}), vec({1e-3, 1}));
    CHECK(s <= 1.0);
    CHECK_THROWS_AS(cosine_similarity(vec({0, 0}), vec({1, 1})), InputError);
    CHECK_THROWS_AS(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), InputError);
    CHECK_THROWS_AS(vec({1, NAN}), InputError);
}

TEST_CASE("hashing embedder")
{
    HashingEmbedder const e(128);
    auto const a = e.embed("Who is the mother of Ada Lovelace?");
    CHECK(a.dimension() == 128);
    CHECK(a.values().norm() == doctest::Approx(1.0));
    CHECK(e.embed("Who is the mother of Ada Lovelace?") == a);

    auto const close = e.embed("Who is the father of Ada Lovelace?");
    auto const far = e.embed("How many moons does Jupiter have");
    CHECK(cosine_similarity(a, close) > cosine_similarity(a, far));

    CHECK_FALSE(HashingEmbedder(128, 1).embed("x") == HashingEmbedder(128, 2).embed("x"));
    CHECK(e.id() == HashingEmbedder(128).id());
    CHECK_THROWS_AS(e.embed("   "), InputError);
    CHECK(e.embed("?").values().norm() == doctest::Approx(1.0));
}

TEST_CASE("http embedder")
{
    kt::StubServer stub;
    json seen;
    std::size_t dim = 4;
    stub.server().Post("/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        json values = json::array();
        for (std::size_t i = 0; i < dim; ++i)
            values.push_back(0.5);
        res.set_content(json{{"data", {{{"embedding", values}}}}}.dump(), "application/json");
    });
    stub.start();

    HttpEmbedderOptions o;
    o.endpoint = stub.url("/embeddings");
    o.dimension = 4;
    HttpEmbedder const e(o);
    auto const v = e.embed("Wer ist Angela Merkel?");
    CHECK(v.dimension() == 4);
    CHECK(seen["input"][0] == "query: Wer ist Angela Merkel?");
    CHECK(seen["model"] == "intfloat/multilingual-e5-large");
    dim = 3;
    CHECK_THROWS_AS(e.embed("x"), ProtocolError);
}

TEST_CASE("pool rejects malformed records")
{
    ExperiencePool pool(2);
    CHECK_THROWS_AS(pool.add_example(record("q", vec({1, 0, 0}), 1.0)), InputError);
    CHECK_THROWS_AS(pool.add_example(record("q", vec({1, 0}), 1.5)), InputError);
    auto no_gold = record("q", vec({1, 0}), 1.0);
    no_gold.gold_sparql.clear();
    CHECK_THROWS_AS(pool.add_example(no_gold), InputError);
    CHECK(pool.empty());
}

TEST_CASE("retrieval: success filter, ordering and ties")
{
    ExperiencePool pool(2);
    pool.add_example(record("tie-a", vec({1, 0}), 1.0));
    pool.add_example(record("failed-best", vec({1, 0.01}), 0.0));
    pool.add_example(record("tie-b", vec({2, 0}), 1.0)); // same direction as tie-a
    pool.add_example(record("orthogonal", vec({0, 1}), 1.0));
    pool.add_example(record("almost", vec({1, 0}), 1.0 - 1e-12));
    pool.add_example(record("partial", vec({1, 0}), 0.5));

    auto const q = vec({1, 0});
    auto const plans = pool.find_top_n_plans(q, 10);
    std::vector<std::string> names;
    for (auto const& m : plans)
        names.push_back(m.record->question);
    CHECK(names == std::vector<std::string>{"tie-a", "tie-b", "almost", "orthogonal"});
    CHECK(pool.find_top_n_plans(q, 2).size() == 2);

    auto const queries = pool.find_top_n_queries(q, 3);
    REQUIRE(queries.size() == 3);
    CHECK(queries[0].question == "tie-a");
    CHECK(queries[1].question == "tie-b");
    CHECK(queries[2].question == "almost");
    CHECK(queries[0].sparql.find("?gold") != std::string::npos);
    auto const generated = pool.find_top_n_queries(q, 1, QueryExampleSource::generated);
    CHECK(generated[0].sparql.find("?gen") != std::string::npos);
    // failed records are valid query examples
    auto const all = pool.find_top_n_queries(q, 10);
    CHECK(all.size() == 6);

    CHECK_THROWS_AS(pool.find_top_n_plans(q, 0), InputError);
    CHECK_THROWS_AS(pool.find_top_n_plans(vec({1, 0, 0}), 1), InputError);
    CHECK(ExperiencePool(2).find_top_n_plans(q, 3).empty());
}

TEST_CASE("retrieval language filter")
{
    ExperiencePool pool(2);
    pool.add_example(record("en", vec({1, 0}), 1.0, "en"));
    pool.add_example(record("de", vec({1, 0}), 1.0, "de"));
    auto const de = pool.find_top_n_plans(vec({1, 0}), 5, std::string("de"));
    REQUIRE(de.size() == 1);
    CHECK(de[0].record->question == "de");
    CHECK(pool.find_top_n_plans(vec({1, 0}), 5).size() == 2);
}

TEST_CASE("pool files")
{
    auto const path = temp_file("pool.jsonl");
    ExperiencePool pool(2, "hash:2:1");
    pool.add_example(record("Wer ist Angela Merkel?", vec({0.25, -1.5}), 1.0, "de"));
    pool.add_example(record("second", vec({1, 1}), 0.0));
    pool.save(path);

    auto const loaded = ExperiencePool::load(path);
    CHECK(loaded.records() == pool.records());
    CHECK(loaded.embedder_id() == "hash:2:1");
    CHECK(loaded.dimension() == 2);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(json::parse(header)["format_version"] == 1);
    in.close();

    {
        std::ofstream out(path);
        out << json{{"format_version", 99}, {"dimension", 2}, {"embedder_id", ""}}.dump() << '\n';
    }
    CHECK_THROWS_AS(ExperiencePool::load(path), VersionError);
    {
        std::ofstream out(path);
        out << json{{"format_version", 1}, {"dimension", 2}, {"embedder_id", ""}}.dump() << "\n{not json\n";
    }
    CHECK_THROWS_AS(ExperiencePool::load(path), IoError);
    CHECK_THROWS_AS(ExperiencePool::load(temp_file("missing.jsonl")), IoError);
    fs::remove(path);
}

TEST_CASE("plan parsing")
{
    auto const p = parse_plan("Here is the plan:\n1. Link **Angela Merkel**\n2) Find the relation\nStep 3: Write the query\n"
                              "That's it.");
    CHECK(p.steps == std::vector<std::string>{"Link Angela Merkel", "Find the relation", "Write the query"});
    CHECK(p.raw_text.find("Here is the plan") == 0);

    CHECK(parse_plan("- first\n* second\n\xE2\x80\xA2 third").steps.size() == 3);
    CHECK(parse_plan("```\n1. inside fence\n```").steps == std::vector<std::string>{"inside fence"});
    CHECK_THROWS_AS(parse_plan("Just write the query."), PlanParseError);
    try {
        parse_plan("no list here");
    } catch (const PlanParseError& e) {
        CHECK(e.raw_text() == "no list here");
    }
    CHECK(format_plan(p) == "1. Link Angela Merkel\n2. Find the relation\n3. Write the query");
}
