// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kgqa/sparql.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kgqa {

struct QaldQuestion {
    std::string id;
    std::map<std::string, std::string> strings; ///< language code -> question text
    std::string gold_sparql;
    std::optional<AnswerSet> gold_answers;

    const std::string* text(const std::string& language) const
    {
        auto it = strings.find(language);
        return it == strings.end() ? nullptr : &it->second;
    }
};

enum class Split { train, test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view text);

struct QaldDataset {
    std::vector<QaldQuestion> questions;
    Split split = Split::test;

    std::size_t size() const noexcept { return questions.size(); }
};

/// Parses the QALD JSON layout: {"questions": [{"id", "question": [{"language",
/// "string"}], "query": {"sparql"}, "answers": [results JSON]}]}.
/// Throws DatasetError carrying the offending question index.
QaldDataset parse_qald(const nlohmann::json& document, Split split);
QaldDataset load_qald(const std::filesystem::path& path, Split split);

} // namespace kgqa
