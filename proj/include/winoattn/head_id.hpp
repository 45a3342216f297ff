// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <string>
#include <vector>

namespace winoattn {

/// One attention head, addressed as (layer, head).
struct HeadId {
  int layer = 0;
  int head = 0;

  auto operator<=>(const HeadId&) const = default;

  std::string name() const { return "l" + std::to_string(layer) + "h" + std::to_string(head); }
};

/// Every head of an L x H model in layer-major order.
std::vector<HeadId> all_heads(int layers, int heads);

/// Parses "l3h7" (also accepts "3:7").
HeadId parse_head(const std::string& s);

}  // namespace winoattn
