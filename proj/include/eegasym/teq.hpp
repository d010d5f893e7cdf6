#pragma once

// Toronto Empathy Questionnaire scoring: 16 Likert items, 8 reverse-coded.

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eegasym {

inline constexpr std::size_t kTeqItems = 16;
inline constexpr int kTeqMaxValue = 6;
inline constexpr int kTeqMaxTotal = static_cast<int>(kTeqItems) * kTeqMaxValue;

inline constexpr std::array<std::string_view, 7> kTeqLabels{
    "never", "almost never", "rarely", "sometimes", "often", "very often", "always"};

inline int encode_label(std::string_view label) {
  for (std::size_t i = 0; i < kTeqLabels.size(); ++i)
    if (kTeqLabels[i] == label) return static_cast<int>(i);
  throw std::invalid_argument("unknown label '" + std::string(label) + "'");
}

inline std::string_view decode_label(int value) {
  if (value < 0 || value > kTeqMaxValue)
    throw std::invalid_argument("TEQ value out of range: " + std::to_string(value));
  return kTeqLabels[static_cast<std::size_t>(value)];
}

struct TeqResponse {
  std::string participant_id;
  std::vector<std::string> items;  // 16 labels, item 1 first

  std::vector<int> values() const {
    std::vector<int> v;
    v.reserve(items.size());
    for (const auto& l : items) v.push_back(encode_label(l));
    return v;
  }
};

struct TeqScore {
  std::string participant_id;
  int total{0};
};

// 1-based item indices. The default is the instrument's negatively worded
// items; override with a JSON list.
using ReverseSet = std::vector<int>;

inline ReverseSet default_reverse_items() { return {2, 4, 7, 10, 11, 12, 14, 15}; }

// Throws on out-of-range or duplicate indices, and on a set whose size is not
// 8 unless `require_half` is false.
inline void check_reverse_set(const ReverseSet& items, bool require_half = true) {
  std::set<int> seen;
  for (int i : items) {
    if (i < 1 || i > static_cast<int>(kTeqItems))
      throw std::invalid_argument("reverse item index out of range: " + std::to_string(i));
    if (!seen.insert(i).second)
      throw std::invalid_argument("duplicate reverse item index: " + std::to_string(i));
  }
  if (require_half && items.size() != kTeqItems / 2)
    throw std::invalid_argument("reverse set must contain 8 items, got " +
                                std::to_string(items.size()));
}

inline TeqScore score(const TeqResponse& resp, const ReverseSet& reverse_items,
                      bool require_half = true) {
  if (resp.items.size() != kTeqItems)
    throw std::invalid_argument("expected 16 items, got " + std::to_string(resp.items.size()));
  check_reverse_set(reverse_items, require_half);
  const auto v = resp.values();
  int total = 0;
  for (std::size_t i = 0; i < kTeqItems; ++i) {
    const bool reversed = std::find(reverse_items.begin(), reverse_items.end(),
                                    static_cast<int>(i + 1)) != reverse_items.end();
    total += reversed ? kTeqMaxValue - v[i] : v[i];
  }
  return {resp.participant_id, total};
}

// Deterministic answers whose scored total equals `total`: coded values are
// spread as evenly as possible (earlier items take the remainder), then
// reversed items are written as 6 - coded.
inline TeqResponse response_for_total(std::string participant_id, int total,
                                      const ReverseSet& reverse_items) {
  if (total < 0 || total > kTeqMaxTotal)
    throw std::invalid_argument("score outside [0,96]: " + std::to_string(total));
  check_reverse_set(reverse_items, false);
  TeqResponse r{std::move(participant_id), {}};
  const int base = total / static_cast<int>(kTeqItems);
  const int extra = total % static_cast<int>(kTeqItems);
  for (std::size_t i = 0; i < kTeqItems; ++i) {
    const int coded = base + (static_cast<int>(i) < extra ? 1 : 0);
    const bool reversed = std::find(reverse_items.begin(), reverse_items.end(),
                                    static_cast<int>(i + 1)) != reverse_items.end();
    r.items.emplace_back(decode_label(reversed ? kTeqMaxValue - coded : coded));
  }
  return r;
}

}  // namespace eegasym
