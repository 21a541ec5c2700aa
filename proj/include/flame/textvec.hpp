#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "flame/util.hpp"

namespace flame {

// Maximal runs of [A-Za-z0-9_], lowercased.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || ch == '_') {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

// Signed feature hashing: bucket = fnv1a64(token) mod dim, sign from bit 63.
struct SparseVec {
    std::map<std::uint32_t, double> entries;

    void add_token(std::string_view token, std::uint32_t dim, double count = 1.0) {
        std::uint64_t h = fnv1a64(token);
        std::uint32_t bucket = static_cast<std::uint32_t>(h % dim);
        double sign = (h >> 63) ? -1.0 : 1.0;
        entries[bucket] += sign * count;
        if (entries[bucket] == 0.0) entries.erase(bucket);
    }

    double norm() const {
        double s = 0.0;
        for (const auto& [_, v] : entries) s += v * v;
        return std::sqrt(s);
    }

    bool zero() const { return entries.empty(); }
};

inline SparseVec hash_tokens(const std::vector<std::string>& tokens, std::uint32_t dim) {
    SparseVec v;
    for (const auto& t : tokens) v.add_token(t, dim);
    return v;
}

// dot(a,b)/(|a||b|); zero vector pairs with anything as 0.
inline double sparse_cosine(const SparseVec& a, const SparseVec& b) {
    if (a.zero() || b.zero()) return 0.0;
    double dot = 0.0;
    const auto& small = a.entries.size() <= b.entries.size() ? a : b;
    const auto& large = a.entries.size() <= b.entries.size() ? b : a;
    for (const auto& [k, v] : small.entries) {
        auto it = large.entries.find(k);
        if (it != large.entries.end()) dot += v * it->second;
    }
    return dot / (a.norm() * b.norm());
}

} // namespace flame
