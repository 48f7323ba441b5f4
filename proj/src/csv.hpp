#pragma once

// Minimal RFC-4180 reader/writer shared by the loaders and result writers.

#include <string>
#include <string_view>
#include <vector>

namespace emdot::csv {

/// Splits text into records. Quoted fields may contain commas, quotes ("")
/// and line breaks. A trailing newline does not produce an empty record.
std::vector<std::vector<std::string>> parse(std::string_view text);

/// Quotes a field when it contains a comma, quote or line break.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace emdot::csv
