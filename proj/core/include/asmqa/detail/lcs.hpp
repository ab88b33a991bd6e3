#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace asmqa {

template <typename Seq>
std::size_t lcs_length(const Seq& a, const Seq& b) {
    // Rolling single row over the shorter sequence.
    const Seq& row_seq = a.size() <= b.size() ? a : b;
    const Seq& col_seq = a.size() <= b.size() ? b : a;
    const std::size_t n = row_seq.size();
    if (n == 0) return 0;
    std::vector<std::size_t> row(n + 1, 0);
    for (const auto& c : col_seq) {
        std::size_t diag = 0;  // row[j - 1] from the previous pass
        for (std::size_t j = 1; j <= n; ++j) {
            const std::size_t up = row[j];
            row[j] = (row_seq[j - 1] == c) ? diag + 1 : std::max(up, row[j - 1]);
            diag = up;
        }
    }
    return row[n];
}

}  // namespace asmqa
