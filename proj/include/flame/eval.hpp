#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "flame/error.hpp"
#include "flame/vote.hpp"

namespace flame {

struct EvalRecord {
    std::string program_id;
    SuspiciousnessRanking ranking;
    std::set<int> truth; // ground-truth faulty lines as global lines
};

struct TopKTable {
    std::vector<int> ks;
    std::map<int, int> counts;
    std::map<int, double> accuracy;
    int total = 0;
};

// True iff any ground-truth line appears in the first min(k, n) entries.
inline bool topk_hit(const EvalRecord& r, int k) {
    if (k < 1) throw Error("k must be positive");
    if (r.truth.empty()) throw Error("no ground truth for " + r.program_id);
    int limit = std::min(k, static_cast<int>(r.ranking.order.size()));
    for (int i = 0; i < limit; ++i) {
        if (r.truth.count(r.ranking.order[static_cast<std::size_t>(i)])) return true;
    }
    return false;
}

inline TopKTable evaluate(const std::vector<EvalRecord>& records,
                          std::vector<int> ks = {1, 3, 5, 10}) {
    if (records.empty()) throw Error("no records to evaluate");
    TopKTable table;
    table.ks = ks;
    table.total = static_cast<int>(records.size());
    for (int k : ks) {
        int count = 0;
        for (const auto& r : records) {
            if (topk_hit(r, k)) ++count;
        }
        table.counts[k] = count;
        table.accuracy[k] = static_cast<double>(count) / static_cast<double>(table.total);
    }
    return table;
}

// Venn-cell counts over per-method hit sets. Region keys are the method
// names of the cell joined by '&' in sorted order; every cell is reported,
// including empty ones.
inline std::map<std::string, int> overlap(
    const std::map<std::string, std::set<std::string>>& hits_by_method) {
    if (hits_by_method.size() < 2) throw Error("overlap needs at least two methods");
    std::vector<std::string> methods;
    for (const auto& [name, _] : hits_by_method) methods.push_back(name);
    const std::size_t m = methods.size();

    std::set<std::string> universe;
    for (const auto& [_, ids] : hits_by_method) universe.insert(ids.begin(), ids.end());

    std::map<std::string, int> regions;
    for (std::size_t mask = 1; mask < (1u << m); ++mask) {
        std::string key;
        for (std::size_t i = 0; i < m; ++i) {
            if (mask & (1u << i)) {
                if (!key.empty()) key += '&';
                key += methods[i];
            }
        }
        regions[key] = 0;
    }
    for (const auto& id : universe) {
        std::size_t mask = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (hits_by_method.at(methods[i]).count(id)) mask |= 1u << i;
        }
        std::string key;
        for (std::size_t i = 0; i < m; ++i) {
            if (mask & (1u << i)) {
                if (!key.empty()) key += '&';
                key += methods[i];
            }
        }
        regions[key] += 1;
    }
    return regions;
}

} // namespace flame
