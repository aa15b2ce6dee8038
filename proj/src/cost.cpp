// SPDX-License-Identifier: Apache-2.0
#include "kgqa/cost.hpp"

#include "kgqa/agent.hpp"
#include "kgqa/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace kgqa {

double tbp(const UsageStats& usage, const TokenPricing& pricing)
{
    return ((usage.n_i * pricing.price_per_input_token) + (usage.n_o * pricing.price_per_output_token)) * usage.n_c
        * usage.n_q;
}

double gbp(const UsageStats& usage, const GpuPricing& pricing)
{
    if (!(pricing.tokens_per_second > 0.0))
        throw InputError("tokens_per_second must be positive");
    return (usage.n_q * usage.n_c * usage.n_o / pricing.tokens_per_second) * pricing.price_per_gpu_second;
}

double gpu_hours(const UsageStats& usage, double tokens_per_second)
{
    if (!(tokens_per_second > 0.0))
        throw InputError("tokens_per_second must be positive");
    return usage.n_q * usage.n_c * usage.n_o / tokens_per_second / 3600.0;
}

double price(const UsageStats& usage, const Pricing& pricing)
{
    return std::visit(
        [&](const auto& p) {
            if constexpr (std::is_same_v<std::decay_t<decltype(p)>, TokenPricing>)
                return tbp(usage, p);
            else
                return gbp(usage, p);
        },
        pricing);
}

double price_per_100_questions(const UsageStats& usage, const Pricing& pricing)
{
    if (!(usage.n_q > 0.0))
        throw InputError("empty usage");
    return price(usage, pricing) * 100.0 / usage.n_q;
}

UsageStats aggregate_usage(std::span<const UsageSnapshot> per_question)
{
    if (per_question.empty())
        throw InputError("cannot aggregate usage of zero runs");
    double calls = 0.0;
    double input = 0.0;
    double output = 0.0;
    bool estimated = false;
    for (const auto& u : per_question) {
        calls += static_cast<double>(u.calls);
        input += static_cast<double>(u.input_tokens);
        output += static_cast<double>(u.output_tokens);
        estimated = estimated || u.estimated;
    }
    UsageStats stats;
    stats.n_q = static_cast<double>(per_question.size());
    stats.n_c = calls / stats.n_q;
    stats.n_i = calls > 0.0 ? input / calls : 0.0;
    stats.n_o = calls > 0.0 ? output / calls : 0.0;
    stats.estimated = estimated;
    return stats;
}

UsageStats aggregate_usage(std::span<const AgentRunRecord> records)
{
    std::vector<UsageSnapshot> usages;
    usages.reserve(records.size());
    for (const auto& r : records)
        usages.push_back(r.usage);
    return aggregate_usage(usages);
}

std::string format_usd(double amount)
{
    // half-up at the cent; the epsilon absorbs binary representation error (0.125 -> 0.13)
    auto const cents = std::floor(std::abs(amount) * 100.0 + 0.5 + 1e-9);
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "USD %s%.2f", amount < 0 && cents > 0 ? "-" : "", cents / 100.0);
    return buffer;
}

json to_json(const UsageStats& usage)
{
    return {{"n_q", usage.n_q}, {"n_c", usage.n_c}, {"n_i", usage.n_i}, {"n_o", usage.n_o}, {"estimated", usage.estimated}};
}

UsageStats usage_from_json(const json& document)
{
    const json* node = &document;
    if (document.contains("summary") && document["summary"].contains("usage"))
        node = &document["summary"]["usage"];
    else if (document.contains("usage"))
        node = &document["usage"];
    try {
        UsageStats u;
        u.n_q = node->at("n_q").get<double>();
        u.n_c = node->at("n_c").get<double>();
        u.n_i = node->at("n_i").get<double>();
        u.n_o = node->at("n_o").get<double>();
        u.estimated = node->value("estimated", false);
        if (u.n_q < 0 || u.n_c < 0 || u.n_i < 0 || u.n_o < 0)
            throw InputError("usage values must be nonnegative");
        return u;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed usage document: ") + e.what());
    }
}

Pricing pricing_from_json(const json& document)
{
    bool const token = document.contains("p_i") || document.contains("p_o");
    bool const gpu = document.contains("tokens_per_second") || document.contains("price_per_gpu_second");
    if (token == gpu)
        throw InputError("pricing fixture must be either token-based {p_i, p_o} or GPU-based "
                         "{tokens_per_second, price_per_gpu_second}");
    try {
        auto const model = document.value("model", std::string("unknown"));
        if (token) {
            TokenPricing p{model, document.at("p_i").get<double>(), document.at("p_o").get<double>()};
            if (p.price_per_input_token < 0 || p.price_per_output_token < 0)
                throw InputError("token prices must be nonnegative");
            return p;
        }
        GpuPricing p{model, document.at("tokens_per_second").get<double>(),
                     document.at("price_per_gpu_second").get<double>()};
        if (!(p.tokens_per_second > 0) || p.price_per_gpu_second < 0)
            throw InputError("GPU pricing needs a positive rate and a nonnegative price");
        return p;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed pricing fixture: ") + e.what());
    }
}

namespace {

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + " is not valid JSON: " + e.what());
    }
}

} // namespace

Pricing load_pricing(const std::filesystem::path& path)
{
    return pricing_from_json(read_json(path));
}

UsageStats load_usage(const std::filesystem::path& path)
{
    return usage_from_json(read_json(path));
}

} // namespace kgqa
