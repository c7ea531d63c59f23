#pragma once

#include <string_view>
#include <vector>

namespace patchverify::detail {

inline std::string_view trim(std::string_view text) {
  const char* ws = " \t\r\n";
  auto first = text.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  auto last = text.find_last_not_of(ws);
  return text.substr(first, last - first + 1);
}

inline std::string_view strip_comment(std::string_view text) {
  auto hash = text.find('#');
  return hash == std::string_view::npos ? text : text.substr(0, hash);
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto first = text.find_first_not_of(" \t\r\n", pos);
    if (first == std::string_view::npos) break;
    auto last = text.find_first_of(" \t\r\n", first);
    if (last == std::string_view::npos) last = text.size();
    out.push_back(text.substr(first, last - first));
    pos = last;
  }
  return out;
}

}  // namespace patchverify::detail
