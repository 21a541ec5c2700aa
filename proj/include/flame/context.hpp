#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flame/corpus.hpp"
#include "flame/judge.hpp"
#include "flame/llm.hpp"

namespace flame {

enum class FailingSource { TEST, COMPILER };

struct FailingTestInfo {
    FailingSource source = FailingSource::TEST;
    std::optional<std::string> test_id;
    std::optional<std::string> input;
    std::optional<std::string> expected_output;
    std::optional<std::string> actual_output; // present iff verdict == WA
    std::optional<Verdict> verdict;
    std::optional<std::string> diagnostics; // COMPILER source only
};

struct ContextToggles {
    bool use_statement = true;
    bool use_test = true;
    bool use_reference = true;
};

struct AuxiliaryContext {
    std::optional<std::string> statement;
    std::optional<FailingTestInfo> failing_test;
    std::optional<FlatProgram> reference;
};

inline std::string render_statement(const Problem& prob) {
    std::string out;
    auto section = [&](const char* title, const std::string& body) {
        if (body.empty()) return;
        out += std::string("# ") + title + "\n" + body + "\n\n";
    };
    section("Description", prob.description);
    section("Input", prob.input_spec);
    section("Output", prob.output_spec);
    if (!prob.samples.empty()) {
        out += "# Samples\n";
        int k = 1;
        for (const auto& sample : prob.samples) {
            out += "## Sample " + std::to_string(k++) + "\nInput:\n" + sample.input +
                   "\nOutput:\n" + sample.expected_output + "\n";
            if (sample.note) out += "Note: " + *sample.note + "\n";
        }
        out += "\n";
    }
    return rstrip(out);
}

namespace detail {

// WA > RE > TLE > MLE; AC and CE never rank.
inline int failing_priority(Verdict v) {
    switch (v) {
        case Verdict::WA: return 4;
        case Verdict::RE: return 3;
        case Verdict::TLE: return 2;
        case Verdict::MLE: return 1;
        default: return 0;
    }
}

} // namespace detail

// Picks the compile failure, or the first test (in id order) with the
// highest-priority failing verdict.
inline FailingTestInfo select_failing_test(const JudgeResult& result,
                                           const std::vector<Test>& tests) {
    FailingTestInfo info;
    if (!result.compiled()) {
        info.source = FailingSource::COMPILER;
        info.diagnostics = result.compile.diagnostics;
        return info;
    }

    const TestOutcome* best = nullptr;
    for (const auto& outcome : result.outcomes) {
        int p = detail::failing_priority(outcome.verdict);
        if (p == 0) continue;
        if (!best || p > detail::failing_priority(best->verdict)) best = &outcome;
    }
    if (!best) throw Error("submission not rejected");

    info.source = FailingSource::TEST;
    info.test_id = best->test_id;
    info.verdict = best->verdict;
    for (const auto& test : tests) {
        if (test.id == best->test_id) {
            info.input = test.input;
            info.expected_output = test.expected_output;
            break;
        }
    }
    if (best->verdict == Verdict::WA) info.actual_output = best->actual_output;
    return info;
}

using Embedder = std::function<EmbeddingVector(const std::string&)>;

// argmax of cosine(embed(faulty), embed(candidate)) over the accepted pool,
// ties broken by pool order.
inline std::optional<std::size_t> retrieve_reference_index(const FlatProgram& faulty,
                                                           const std::vector<Submission>& pool,
                                                           const Embedder& embed) {
    if (pool.empty()) return std::nullopt;
    EmbeddingVector target = embed(faulty.text());
    std::optional<std::size_t> best;
    double best_score = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        double score = cosine(target, embed(flatten(pool[i]).text()));
        if (!best || score > best_score) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

inline std::optional<Submission> retrieve_reference(const FlatProgram& faulty,
                                                    const std::vector<Submission>& pool,
                                                    const Embedder& embed) {
    auto idx = retrieve_reference_index(faulty, pool, embed);
    if (!idx) return std::nullopt;
    return pool[*idx];
}

// Each field is populated iff its toggle is on and its source exists. Test
// input/expected/actual are byte-capped with an elision marker.
inline AuxiliaryContext build_context(const Problem& prob, const JudgeResult& result,
                                      std::optional<FlatProgram> reference,
                                      const ContextToggles& toggles,
                                      std::size_t truncate_cap = 4096) {
    AuxiliaryContext ctx;
    if (toggles.use_statement) {
        std::string text = render_statement(prob);
        if (!text.empty()) ctx.statement = std::move(text);
    }
    if (toggles.use_test && !result.accepted()) {
        FailingTestInfo info = select_failing_test(result, prob.tests);
        auto cap = [&](std::optional<std::string>& field) {
            if (field) field = truncate_bytes(*field, truncate_cap);
        };
        cap(info.input);
        cap(info.expected_output);
        cap(info.actual_output);
        ctx.failing_test = std::move(info);
    }
    if (toggles.use_reference && reference) ctx.reference = std::move(reference);
    return ctx;
}

} // namespace flame
