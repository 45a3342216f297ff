// SPDX-License-Identifier: Apache-2.0
#include "winoattn/head_id.hpp"

#include <cstdio>

#include "winoattn/error.hpp"

namespace winoattn {

std::vector<HeadId> all_heads(int layers, int heads) {
  std::vector<HeadId> out;
  out.reserve(static_cast<std::size_t>(layers) * heads);
  for (int l = 0; l < layers; ++l)
    for (int h = 0; h < heads; ++h) out.push_back({l, h});
  return out;
}

HeadId parse_head(const std::string& s) {
  HeadId id;
  char tail = 0;
  if (std::sscanf(s.c_str(), "l%dh%d%c", &id.layer, &id.head, &tail) == 2 ||
      std::sscanf(s.c_str(), "%d:%d%c", &id.layer, &id.head, &tail) == 2) {
    if (id.layer < 0 || id.head < 0) throw InvalidArgument("negative head index: " + s);
    return id;
  }
  throw InvalidArgument("cannot parse head id '" + s + "' (expected l<layer>h<head>)");
}

}  // namespace winoattn
