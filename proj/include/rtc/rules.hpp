#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "rtc/errors.hpp"
#include "rtc/types.hpp"

namespace rtc {

// Encoder decision rule: maps (source symbol x, belief id) to a channel input.
// `support` holds the belief ids the rule is defined on, sorted ascending;
// `table` is x-major, i.e. table[x * support.size() + position_of(b)].
struct EncoderRule {
  std::vector<BeliefId> support;
  std::vector<int> table;

  int z_of(int x, BeliefId b) const {
    auto it = std::lower_bound(support.begin(), support.end(), b);
    if (it == support.end() || *it != b) {
      throw MissingRuleError("encoder rule has no entry for belief id " + std::to_string(b));
    }
    const auto k = static_cast<int>(support.size());
    return table[x * k + static_cast<int>(it - support.begin())];
  }
};

// Decoder decision rule: estimate = table[ym_index(y, m, nm)].
struct DecoderRule {
  std::vector<int> table;
};

// Memory update rule: next memory = table[ym_index(y, m, nm)].
struct MemoryRule {
  std::vector<int> table;
};

// The memory rule used at the final stage: the update is never consumed, so
// the memory is carried through unchanged.
inline MemoryRule identity_memory_rule(int ny, int nm) {
  MemoryRule l;
  l.table.resize(static_cast<std::size_t>(ny) * nm);
  for (int y = 0; y < ny; ++y) {
    for (int m = 0; m < nm; ++m) l.table[ym_index(y, m, nm)] = m;
  }
  return l;
}

}  // namespace rtc
