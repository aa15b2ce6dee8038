// SPDX-License-Identifier: Apache-2.0
#include "kgqa/prompts.hpp"

#include "kgqa/error.hpp"

#include "builtin_prompts.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace kgqa {

std::string_view to_string(PromptKind kind)
{
    switch (kind) {
    case PromptKind::plan: return "plan";
    case PromptKind::action: return "action";
    case PromptKind::feedback: return "feedback";
    }
    return "plan";
}

namespace {

bool is_name_start(char c) { return c >= 'A' && c <= 'Z'; }
bool is_name_char(char c) { return is_name_start(c) || (c >= '0' && c <= '9') || c == '_'; }

/// Length of the placeholder name starting at body[open+1], or 0 if `open` does not start one.
std::size_t placeholder_at(std::string_view body, std::size_t open)
{
    if (body[open] != '{' || open + 1 >= body.size() || !is_name_start(body[open + 1]))
        return 0;
    std::size_t end = open + 1;
    while (end < body.size() && is_name_char(body[end]))
        ++end;
    if (end >= body.size() || body[end] != '}')
        return 0;
    return end - open - 1;
}

std::string strip_trailing_whitespace(std::string s)
{
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' '))
        s.pop_back();
    return s;
}

} // namespace

std::vector<std::string> placeholders_in(std::string_view body)
{
    std::vector<std::string> names;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (auto len = placeholder_at(body, i)) {
            std::string name(body.substr(i + 1, len));
            if (std::find(names.begin(), names.end(), name) == names.end())
                names.push_back(std::move(name));
            i += len + 1;
        }
    }
    return names;
}

std::vector<std::string> required_placeholders(PromptKind kind)
{
    switch (kind) {
    case PromptKind::plan: return {kUserQuestion, kPlanExperience};
    case PromptKind::action: return {kQueryExperience};
    case PromptKind::feedback: return {kUserQuestion, kGeneratedSparql, kFeedback};
    }
    return {};
}

std::string render_prompt(const PromptTemplate& prompt, const PromptBindings& bindings)
{
    std::string_view body = prompt.body;
    std::string out;
    out.reserve(body.size());
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (auto len = placeholder_at(body, i)) {
            auto const name = body.substr(i + 1, len);
            auto it = bindings.find(name);
            if (it == bindings.end())
                throw TemplateError(std::string(name));
            out += it->second;
            i += len + 1;
        } else {
            out.push_back(body[i]);
        }
    }
    return out;
}

PromptRegistry PromptRegistry::builtin()
{
    PromptRegistry registry;
    registry.add({"en", PromptKind::plan, strip_trailing_whitespace(builtin::kEnglishPlan)});
    registry.add({"en", PromptKind::action, strip_trailing_whitespace(builtin::kEnglishAction)});
    registry.add({"en", PromptKind::feedback, strip_trailing_whitespace(builtin::kEnglishFeedback)});
    return registry;
}

PromptRegistry PromptRegistry::from_directory(const std::filesystem::path& dir)
{
    auto registry = builtin();
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
        throw IoError("prompt directory " + dir.string() + " does not exist");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_directory())
            continue;
        auto const language = entry.path().filename().string();
        for (auto kind : {PromptKind::plan, PromptKind::action, PromptKind::feedback}) {
            auto const file = entry.path() / (std::string(to_string(kind)) + ".txt");
            if (!std::filesystem::exists(file))
                continue;
            std::ifstream in(file, std::ios::binary);
            std::stringstream buffer;
            buffer << in.rdbuf();
            if (!in)
                throw IoError("cannot read " + file.string());
            registry.add({language, kind, strip_trailing_whitespace(buffer.str())});
        }
    }
    return registry;
}

void PromptRegistry::add(PromptTemplate prompt)
{
    auto const present = placeholders_in(prompt.body);
    for (const auto& required : required_placeholders(prompt.kind))
        if (std::find(present.begin(), present.end(), required) == present.end())
            throw InputError(std::string(to_string(prompt.kind)) + " template for '" + prompt.language
                             + "' lacks placeholder {" + required + "}");
    auto key = std::make_pair(prompt.language, prompt.kind);
    templates_[std::move(key)] = std::move(prompt);
}

PromptRegistry::Lookup PromptRegistry::resolve(std::string_view language, PromptKind kind) const
{
    if (auto it = templates_.find({std::string(language), kind}); it != templates_.end())
        return {&it->second, false};
    auto it = templates_.find({"en", kind});
    if (it == templates_.end())
        throw InputError("no English " + std::string(to_string(kind)) + " template registered");
    return {&it->second, true};
}

bool PromptRegistry::has_language(std::string_view language) const
{
    return std::any_of(templates_.begin(), templates_.end(),
                       [&](const auto& entry) { return entry.first.first == language; });
}

std::vector<std::string> PromptRegistry::languages() const
{
    std::set<std::string> langs;
    for (const auto& [key, value] : templates_)
        langs.insert(key.first);
    return {langs.begin(), langs.end()};
}

} // namespace kgqa
