#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flame {

// Non-equal region between two line sequences, half-open 0-based ranges.
// a_begin == a_end means a pure insertion on the b side.
struct DiffHunk {
    int a_begin = 0;
    int a_end = 0;
    int b_begin = 0;
    int b_end = 0;
};

// LCS-based diff with a fixed canonical alignment: walk forward over a
// suffix-LCS table, matching equal lines eagerly and preferring the a-side
// advance on ties. LCS alignments are not unique in general; pinning the
// walk makes hunk output deterministic and oracle-checkable.
// Quadratic time and memory in the file length.
inline std::vector<DiffHunk> diff_hunks(const std::vector<std::string>& a,
                                        const std::vector<std::string>& b) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    // L[i][j] = LCS length of a[i..), b[j..)
    std::vector<std::int32_t> table(static_cast<std::size_t>(n + 1) * (m + 1), 0);
    auto L = [&](int i, int j) -> std::int32_t& {
        return table[static_cast<std::size_t>(i) * (m + 1) + j];
    };
    for (int i = n - 1; i >= 0; --i) {
        for (int j = m - 1; j >= 0; --j) {
            L(i, j) = a[i] == b[j] ? L(i + 1, j + 1) + 1 : std::max(L(i + 1, j), L(i, j + 1));
        }
    }

    std::vector<DiffHunk> hunks;
    int i = 0, j = 0;
    int hunk_a = 0, hunk_b = 0;
    bool open = false;
    auto flush = [&](int ai, int bj) {
        if (open) {
            hunks.push_back({hunk_a, ai, hunk_b, bj});
            open = false;
        }
    };
    while (i < n || j < m) {
        if (i < n && j < m && a[i] == b[j]) {
            flush(i, j);
            ++i;
            ++j;
            continue;
        }
        if (!open) {
            hunk_a = i;
            hunk_b = j;
            open = true;
        }
        if (j >= m || (i < n && L(i + 1, j) >= L(i, j + 1))) {
            ++i;
        } else {
            ++j;
        }
    }
    flush(i, j);
    return hunks;
}

} // namespace flame
