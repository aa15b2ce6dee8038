// SPDX-License-Identifier: Apache-2.0
//
// Token-based and GPU-time-based price models for agent runs.
#pragma once

#include "kgqa/llm.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <variant>

namespace kgqa {

struct AgentRunRecord;

/// Averages over a set of runs. n_i and n_o are per call, n_c is per question.
struct UsageStats {
    double n_q = 0.0;
    double n_c = 0.0;
    double n_i = 0.0;
    double n_o = 0.0;
    bool estimated = false;
};

struct TokenPricing {
    std::string model;
    double price_per_input_token = 0.0;  ///< USD
    double price_per_output_token = 0.0; ///< USD
};

struct GpuPricing {
    std::string model;
    double tokens_per_second = 0.0;
    double price_per_gpu_second = 0.0; ///< USD
};

using Pricing = std::variant<TokenPricing, GpuPricing>;

/// [(n_i * p_i) + (n_o * p_o)] * n_c * n_q
double tbp(const UsageStats& usage, const TokenPricing& pricing);

/// (n_q * n_c * n_o / rate) * price per GPU-second. Throws InputError for a
/// nonpositive rate. Input tokens do not enter this model.
double gbp(const UsageStats& usage, const GpuPricing& pricing);

/// Generation time n_q * n_c * n_o / rate, in hours.
double gpu_hours(const UsageStats& usage, double tokens_per_second);

double price(const UsageStats& usage, const Pricing& pricing);

/// Cost scaled to 100 questions. Throws InputError when n_q is zero.
double price_per_100_questions(const UsageStats& usage, const Pricing& pricing);

/// n_q = count, n_c = mean calls, n_i/n_o = token totals over total calls.
/// Throws InputError on an empty list.
UsageStats aggregate_usage(std::span<const UsageSnapshot> per_question);
UsageStats aggregate_usage(std::span<const AgentRunRecord> records);

/// "USD 0.48", rounded half-up to cents.
std::string format_usd(double amount);

json to_json(const UsageStats& usage);
UsageStats usage_from_json(const json& document);

/// {model, p_i, p_o} or {model, tokens_per_second, price_per_gpu_second}.
Pricing pricing_from_json(const json& document);
Pricing load_pricing(const std::filesystem::path& path);

/// Usage from a bare usage document or a benchmark report's summary.usage.
UsageStats load_usage(const std::filesystem::path& path);

} // namespace kgqa
