#pragma once

// Synthetic programs for scalability runs.

#include "polysched/model.hpp"

#include <cstddef>
#include <string>

namespace polysched {

/// n two-dimensional statements over [0, N-1]^2; statement k writes A_k and
/// reads A_{k-1}, transposed on odd k when `transpose` is set.
inline Program chainProgram(std::size_t n, bool transpose = true) {
  Program prog;
  prog.params = {"N"};
  for (std::size_t k = 0; k < n; ++k) {
    Statement s;
    s.id = "S" + std::to_string(k + 1);
    s.order = static_cast<int>(k);
    s.domain.iterators = {"i", "j"};
    s.domain.params = prog.params;
    // Rows over (i, j, N, 1).
    s.domain.constraints = {{{1, 0, 0, 0}, Relation::GreaterEqual},
                            {{-1, 0, 1, -1}, Relation::GreaterEqual},
                            {{0, 1, 0, 0}, Relation::GreaterEqual},
                            {{0, -1, 1, -1}, Relation::GreaterEqual}};
    const std::vector<std::vector<Int>> ident = {{1, 0, 0, 0}, {0, 1, 0, 0}};
    const std::vector<std::vector<Int>> swapped = {{0, 1, 0, 0}, {1, 0, 0, 0}};
    s.accesses.push_back({"A" + std::to_string(k), AccessKind::Write, ident});
    if (k > 0)
      s.accesses.push_back({"A" + std::to_string(k - 1), AccessKind::Read,
                            transpose && k % 2 == 1 ? swapped : ident});
    prog.statements.push_back(std::move(s));
  }
  return prog;
}

} // namespace polysched
