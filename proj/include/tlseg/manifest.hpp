#pragma once

// Dataset manifest: one `image<TAB>gt<TAB>split<TAB>manuscript` entry per
// line, UTF-8, LF line endings.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tlseg/error.hpp"

namespace tlseg {

enum class Split { Train, Val, Test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "test";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

struct ManifestEntry {
  std::string image;
  std::string gt;
  Split split = Split::Train;
  std::string manuscript;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

class DatasetManifest {
 public:
  DatasetManifest() = default;

  /// Fails when any manuscript has more training pages than the budget.
  explicit DatasetManifest(std::vector<ManifestEntry> entries,
                           std::optional<std::size_t> few_shot_budget = std::nullopt)
      : entries_(std::move(entries)), budget_(few_shot_budget) {
    if (!budget_) return;
    std::map<std::string, std::size_t> train;
    for (const auto& e : entries_) {
      if (e.split == Split::Train && ++train[e.manuscript] > *budget_) {
        throw ParameterError("manuscript '" + e.manuscript + "' has more than " +
                             std::to_string(*budget_) + " training pages");
      }
    }
  }

  const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
  std::optional<std::size_t> budget() const noexcept { return budget_; }

  std::size_t count(Split s) const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.split == s ? 1 : 0;
    return n;
  }

 private:
  std::vector<ManifestEntry> entries_;
  std::optional<std::size_t> budget_;
};

inline std::string format_manifest(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& e : manifest.entries()) {
    out += e.image + '\t' + e.gt + '\t' + std::string(to_string(e.split)) + '\t' + e.manuscript +
           '\n';
  }
  return out;
}

inline DatasetManifest parse_manifest(std::string_view text,
                                      std::optional<std::size_t> few_shot_budget = std::nullopt) {
  std::vector<ManifestEntry> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view row = text.substr(pos, end - pos);
    pos = end + 1;
    if (row.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = row.find('\t', start);
      fields.push_back(row.substr(start, tab == std::string_view::npos ? row.npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw ParseError("expected 4 tab-separated fields, found " + std::to_string(fields.size()),
                       line_no, 1);
    }
    const auto split = parse_split(fields[2]);
    if (!split) {
      throw ParseError("unknown split '" + std::string(fields[2]) + "'", line_no,
                       fields[0].size() + fields[1].size() + 3);
    }
    entries.push_back({std::string(fields[0]), std::string(fields[1]), *split,
                       std::string(fields[3])});
  }
  return DatasetManifest(std::move(entries), few_shot_budget);
}

}  // namespace tlseg
