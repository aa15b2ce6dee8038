// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kgqa {

enum class PromptKind { plan, action, feedback };

std::string_view to_string(PromptKind kind);

inline constexpr const char* kUserQuestion = "USER_QUESTION";
inline constexpr const char* kPlanExperience = "PLAN_EXPERIENCE_EXAMPLE";
inline constexpr const char* kQueryExperience = "QUESTION_QUERY_EXAMPLE";
inline constexpr const char* kGeneratedSparql = "GENERATED_SPARQL";
inline constexpr const char* kFeedback = "FEEDBACK";

/// Template text with `{NAME}` placeholders, NAME in [A-Z][A-Z0-9_]*.
struct PromptTemplate {
    std::string language;
    PromptKind kind = PromptKind::plan;
    std::string body;
};

/// Distinct placeholder names in order of first appearance.
std::vector<std::string> placeholders_in(std::string_view body);

/// Placeholders a template of `kind` must contain.
std::vector<std::string> required_placeholders(PromptKind kind);

using PromptBindings = std::map<std::string, std::string, std::less<>>;

/// Single-pass substitution; bound values are never rescanned.
/// Throws TemplateError naming the first unbound placeholder.
std::string render_prompt(const PromptTemplate& prompt, const PromptBindings& bindings);

class PromptRegistry {
public:
    /// English templates compiled into the library.
    static PromptRegistry builtin();

    /// builtin() plus every `<dir>/<lang>/{plan,action,feedback}.txt` found.
    static PromptRegistry from_directory(const std::filesystem::path& dir);

    /// Validates required placeholders, then adds or replaces.
    void add(PromptTemplate prompt);

    struct Lookup {
        const PromptTemplate* prompt;
        bool fell_back; ///< true when English stood in for `language`
    };

    /// Template for (language, kind), falling back to English.
    Lookup resolve(std::string_view language, PromptKind kind) const;

    bool has_language(std::string_view language) const;
    std::vector<std::string> languages() const;

private:
    std::map<std::pair<std::string, PromptKind>, PromptTemplate> templates_;
};

} // namespace kgqa
