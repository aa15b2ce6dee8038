// SPDX-License-Identifier: Apache-2.0
#include "kgqa/plan.hpp"

#include "kgqa/error.hpp"

#include <regex>

namespace kgqa {

namespace {

std::string trim(std::string_view s)
{
    auto const b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto const e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string strip_emphasis(std::string s)
{
    // "**Step 1:** foo" is common model output
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '*' && i + 1 < s.size() && s[i + 1] == '*') {
            ++i;
            continue;
        }
        out.push_back(s[i]);
    }
    return out;
}

} // namespace

Plan parse_plan(std::string_view raw)
{
    static const std::regex enumerated(R"(^(?:step\s*)?\d+\s*[.):\-]\s*(.*)$)", std::regex::icase);
    static const std::regex bullet("^(?:[-*+]|\xE2\x80\xA2)\\s+(.*)$");

    std::vector<std::string> marked;

    std::size_t pos = 0;
    while (pos <= raw.size()) {
        auto const nl = raw.find('\n', pos);
        auto const line = trim(strip_emphasis(std::string(raw.substr(pos, nl == std::string_view::npos ? raw.npos : nl - pos))));
        pos = nl == std::string_view::npos ? raw.size() + 1 : nl + 1;
        if (line.empty() || line.starts_with("```"))
            continue;

        std::smatch m;
        if (std::regex_match(line, m, enumerated) || std::regex_match(line, m, bullet)) {
            auto step = trim(m[1].str());
            if (!step.empty())
                marked.push_back(std::move(step));
        }
    }

    Plan plan;
    plan.raw_text = std::string(raw);
    plan.steps = std::move(marked);
    if (plan.steps.empty())
        throw PlanParseError(std::string(raw));
    return plan;
}

std::string format_plan(const Plan& plan)
{
    std::string out;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
        out += std::to_string(i + 1) + ". " + plan.steps[i];
        if (i + 1 < plan.steps.size())
            out += '\n';
    }
    return out;
}

} // namespace kgqa
