#pragma once

#include <filesystem>
#include <string>

#include "cfaudit/scm.hpp"

namespace cfaudit {

// Model file format (JSON, UTF-8):
//   {
//     "name": "xor_sel",                         // optional
//     "variables": [ {"name","kind","domain"} ], // kind: "noise" | "observed"
//     "parents":   { "X": ["A","U_X"], ... },    // omitted or [] for roots
//     "equations": { "X": [ {"when": {"A":"0","U_X":"1"}, "value": "1"}, ... ] },
//     "noise":     { "U_X": [0.5, 0.5], ... }    // aligned with the domain
//   }
// Dependent noise instead uses
//   "noise": { "joint": { "rows": [ {"when": {...}, "p": 0.25}, ... ] } }
// Equations must be total: exactly one row per joint parent assignment.
Scm parse_model(const std::string& text,
                std::uint64_t enumeration_cap = Scm::kDefaultEnumerationCap);
Scm load_model_file(const std::filesystem::path& path,
                    std::uint64_t enumeration_cap = Scm::kDefaultEnumerationCap);

// Optional model name carried by the file ("" if absent).
std::string model_name(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace cfaudit
