#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "flame/annotate.hpp"
#include "flame/error.hpp"

namespace flame {

enum class VoteMode { WEIGHTED, UNWEIGHTED };

struct SelectedExplanation {
    std::string text;
    std::string model;
};

// Aggregated result over all annotations of one program: per-line scores,
// the tie-broken permutation of 1..n, and the surviving explanations.
struct SuspiciousnessRanking {
    int n = 0;
    std::map<int, double> scores; // only lines with score > 0
    std::vector<int> order;       // score descending, ties by ascending line
    std::map<int, SelectedExplanation> explanations;

    double score_of(int line) const {
        auto it = scores.find(line);
        return it == scores.end() ? 0.0 : it->second;
    }
};

// Normalized weight 1/|A| per flagged line; unflagged lines weigh 0.
inline std::map<int, double> weights(const Annotation& a) {
    std::map<int, double> w;
    if (a.flagged.empty()) return w;
    double share = 1.0 / static_cast<double>(a.flagged.size());
    for (int line : a.flagged) w[line] = share;
    return w;
}

// s(line) = sum of per-annotation weights; the unweighted ablation counts 1
// per flagged line instead.
inline std::map<int, double> aggregate(const std::vector<Annotation>& annotations,
                                       VoteMode mode = VoteMode::WEIGHTED) {
    std::map<int, double> scores;
    for (const auto& a : annotations) {
        if (mode == VoteMode::UNWEIGHTED) {
            for (int line : a.flagged) scores[line] += 1.0;
        } else {
            for (const auto& [line, w] : weights(a)) scores[line] += w;
        }
    }
    return scores;
}

// Permutation of 1..n: score descending, ties by ascending line number.
inline std::vector<int> rank(const std::map<int, double>& scores, int n) {
    for (const auto& [line, _] : scores) {
        if (line < 1 || line > n) throw Error("score key out of range: " + std::to_string(line));
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 1);
    auto score_of = [&](int line) {
        auto it = scores.find(line);
        return it == scores.end() ? 0.0 : it->second;
    };
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double sa = score_of(a), sb = score_of(b);
        if (sa != sb) return sa > sb;
        return a < b;
    });
    return order;
}

// For each scored line, keeps the explanation from the annotation that
// assigned it the highest weight; ties go to the earlier model in the
// configured order, then to the lower round.
inline std::map<int, SelectedExplanation> select_explanations(
    const std::vector<Annotation>& annotations, const std::map<int, double>& scores,
    const std::vector<std::string>& model_order = {}) {
    auto model_rank = [&](const std::string& model) {
        for (std::size_t i = 0; i < model_order.size(); ++i) {
            if (model_order[i] == model) return i;
        }
        return model_order.size();
    };

    std::map<int, SelectedExplanation> selected;
    for (const auto& [line, score] : scores) {
        if (score <= 0.0) continue;
        const Annotation* best = nullptr;
        double best_weight = 0.0;
        for (const auto& a : annotations) {
            if (!a.flagged.count(line) || !a.explanations.count(line)) continue;
            double w = 1.0 / static_cast<double>(a.flagged.size());
            if (!best || w > best_weight ||
                (w == best_weight &&
                 (model_rank(a.model) < model_rank(best->model) ||
                  (model_rank(a.model) == model_rank(best->model) && a.round < best->round)))) {
                best = &a;
                best_weight = w;
            }
        }
        if (best) selected[line] = {best->explanations.at(line), best->model};
    }
    return selected;
}

inline SuspiciousnessRanking run_vote(const std::vector<Annotation>& annotations, int n,
                                      VoteMode mode = VoteMode::WEIGHTED,
                                      const std::vector<std::string>& model_order = {}) {
    SuspiciousnessRanking ranking;
    ranking.n = n;
    ranking.scores = aggregate(annotations, mode);
    ranking.order = rank(ranking.scores, n);
    ranking.explanations = select_explanations(annotations, ranking.scores, model_order);
    return ranking;
}

} // namespace flame
