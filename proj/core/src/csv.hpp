#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace rtpos::detail {

// Splits one CSV record. Handles quoted fields, doubled quotes inside quotes,
// and a trailing carriage return.
std::vector<std::string> split_csv_line(std::string_view line);

// Iterates the records of a CSV table. The header row is parsed first and
// `row` is invoked per data row with (line_number, fields). Returns the
// header fields. Skips blank lines and strips a UTF-8 BOM.
std::vector<std::string> for_each_csv_row(
    std::string_view content,
    const std::function<void(std::size_t, const std::vector<std::string>&)>& row);

// Index of `name` in `header`, or -1.
int csv_column(const std::vector<std::string>& header, std::string_view name);

}  // namespace rtpos::detail
