// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kgqa {

/// Ordered subtasks produced by the planning call.
struct Plan {
    std::vector<std::string> steps;
    std::string raw_text;

    bool empty() const noexcept { return steps.empty(); }
    bool operator==(const Plan&) const = default;
};

/// Extracts enumerated steps ("1. x", "2) x", "Step 3: x", "- x", "* x").
/// Prose lines around the list are ignored.
/// Throws PlanParseError when nothing survives.
Plan parse_plan(std::string_view raw);

/// Numbered rendering used when a plan is shown back to the model.
std::string format_plan(const Plan& plan);

} // namespace kgqa
