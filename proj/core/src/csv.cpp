#include "csv.hpp"

namespace rtpos::detail {

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::vector<std::string> for_each_csv_row(
    std::string_view content,
    const std::function<void(std::size_t, const std::vector<std::string>&)>& row) {
  if (content.substr(0, 3) == "\xef\xbb\xbf") content.remove_prefix(3);

  std::vector<std::string> header;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    const std::size_t nl = content.find('\n', pos);
    const std::string_view line =
        nl == std::string_view::npos ? content.substr(pos)
                                     : content.substr(pos, nl - pos);
    pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
    ++line_no;

    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (header.empty()) {
      // Trim surrounding whitespace in header names only.
      for (auto& f : fields) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
      }
      header = std::move(fields);
    } else {
      row(line_no, fields);
    }
  }
  return header;
}

int csv_column(const std::vector<std::string>& header, std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace rtpos::detail
