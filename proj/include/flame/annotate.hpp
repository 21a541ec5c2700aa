#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "flame/context.hpp"
#include "flame/corpus.hpp"
#include "flame/llm.hpp"
#include "flame/prompts.hpp"
#include "flame/textvec.hpp"

namespace flame {

enum class AnnotationMode { MARKER, LINE_NUMBERS };

// One model-round's flagged lines (global line numbers of the original
// program) with their explanations.
struct Annotation {
    std::string model;
    int round = 1;
    std::set<int> flagged;
    std::map<int, std::string> explanations; // key set equals flagged in MARKER mode
    std::vector<std::string> warnings;       // dropped flags, parse oddities
};

struct PromptBundle {
    std::string system;
    std::string user;
    AnnotationMode mode = AnnotationMode::MARKER;
};

namespace detail {

inline constexpr std::uint32_t kLineVectorDim = 1u << 18;

// Content before the marker, if any.
inline std::string strip_marker_suffix(std::string_view line) {
    auto pos = line.find(kMarkerToken);
    if (pos == std::string_view::npos) return std::string(line);
    return std::string(line.substr(0, pos));
}

inline bool is_collapse_content(const std::string& stripped) {
    return stripped == "..." || stripped == "…";
}

inline bool is_collapse_line(std::string_view line) {
    return is_collapse_content(strip(strip_marker_suffix(line)));
}

// Unwraps the last fenced code block; without fences the whole response is
// treated as the annotated program.
inline std::vector<std::string> code_lines_of(const std::string& response) {
    auto lines = split_lines(response);
    std::vector<std::vector<std::string>> blocks;
    bool in_fence = false;
    for (const auto& line : lines) {
        if (starts_with(lstrip(line), "```")) {
            if (!in_fence) blocks.emplace_back();
            in_fence = !in_fence;
            continue;
        }
        if (in_fence && !blocks.empty()) blocks.back().push_back(line);
    }
    if (!blocks.empty()) return blocks.back();
    return lines;
}

} // namespace detail

// Bag-of-tokens hashed into 2^18 signed buckets, computed on the line body
// with any appended marker annotation stripped first.
inline SparseVec line_vector(std::string_view line) {
    return hash_tokens(tokenize(detail::strip_marker_suffix(line)), detail::kLineVectorDim);
}

// Cosine of the line vectors clamped to [0,1]. Two lines that are blank
// after stripping compare as 1.0; a blank against a non-blank as 0.0.
inline double line_similarity(std::string_view a, std::string_view b) {
    SparseVec va = line_vector(a);
    SparseVec vb = line_vector(b);
    if (va.zero() && vb.zero()) {
        bool blank_a = strip(detail::strip_marker_suffix(a)).empty();
        bool blank_b = strip(detail::strip_marker_suffix(b)).empty();
        return blank_a && blank_b ? 1.0 : 0.0;
    }
    double sim = sparse_cosine(va, vb);
    return std::min(1.0, std::max(0.0, sim));
}

// Maps each marker-bearing annotated line back to an original global line by
// probing offsets 0, +1, -1, +2, -2, ... from its own index and accepting
// the first unclaimed non-header line whose similarity exceeds the
// threshold. The mapping is injective; unmatched lines stay unmapped.
inline std::map<int, int> align(const std::vector<std::string>& annotated_lines,
                                const FlatProgram& original, double threshold = 0.9) {
    std::map<int, int> mapping;
    std::set<int> claimed;
    const int n = original.size();
    const int total = static_cast<int>(annotated_lines.size());

    std::vector<std::optional<SparseVec>> original_vecs(static_cast<std::size_t>(n));
    auto original_vec = [&](int g) -> const SparseVec& {
        auto& slot = original_vecs[static_cast<std::size_t>(g - 1)];
        if (!slot) slot = line_vector(original.lines[static_cast<std::size_t>(g - 1)]);
        return *slot;
    };

    for (int i = 1; i <= total; ++i) {
        const std::string& line = annotated_lines[static_cast<std::size_t>(i - 1)];
        if (line.find(kMarkerToken) == std::string::npos) continue;
        if (detail::is_collapse_line(line)) continue;

        SparseVec vec = line_vector(line);
        bool blank = strip(detail::strip_marker_suffix(line)).empty();

        const int max_offset = std::max(i - 1, n - i) + std::max(0, n - total);
        for (int k = 0; k <= max_offset; ++k) {
            bool matched = false;
            for (int dir : {+1, -1}) {
                if (k == 0 && dir < 0) continue;
                int g = i + dir * k;
                if (g < 1 || g > n) continue;
                if (claimed.count(g) || original.is_header(g)) continue;
                const std::string& cand = original.lines[static_cast<std::size_t>(g - 1)];
                if (detail::is_collapse_line(cand)) continue;

                double sim;
                const SparseVec& cvec = original_vec(g);
                if (vec.zero() && cvec.zero()) {
                    sim = blank && strip(cand).empty() ? 1.0 : 0.0;
                } else {
                    sim = std::min(1.0, std::max(0.0, sparse_cosine(vec, cvec)));
                }
                if (sim > threshold) {
                    mapping[i] = g;
                    claimed.insert(g);
                    matched = true;
                    break;
                }
            }
            if (matched) break;
        }
    }
    return mapping;
}

// Flags every marker-bearing line of the response, re-aligned to the
// original program; the explanation is the text after the marker.
inline Annotation parse_annotations(const std::string& response, const FlatProgram& original,
                                    const std::string& model, int round,
                                    double threshold = 0.9) {
    Annotation ann;
    ann.model = model;
    ann.round = round;

    auto code = detail::code_lines_of(response);
    if (strip(join_lines(code)).empty()) {
        ann.warnings.push_back("no code content in response");
        return ann;
    }

    auto mapping = align(code, original, threshold);
    for (int i = 1; i <= static_cast<int>(code.size()); ++i) {
        const std::string& line = code[static_cast<std::size_t>(i - 1)];
        auto pos = line.find(kMarkerToken);
        if (pos == std::string::npos) continue;
        if (detail::is_collapse_line(line)) continue;

        auto it = mapping.find(i);
        if (it == mapping.end()) {
            ann.warnings.push_back("dropped marker on unaligned line " + std::to_string(i) +
                                   ": " + strip(line));
            continue;
        }
        ann.flagged.insert(it->second);
        ann.explanations[it->second] =
            strip(line.substr(pos + std::string(kMarkerToken).size()));
    }
    return ann;
}

// Ablation-mode parser: integer line numbers straight from the response.
inline Annotation parse_line_numbers(const std::string& response, const FlatProgram& original,
                                     const std::string& model, int round) {
    Annotation ann;
    ann.model = model;
    ann.round = round;
    const int n = original.size();
    long long value = -1;
    auto commit = [&]() {
        if (value >= 1 && value <= n && !original.is_header(static_cast<int>(value))) {
            ann.flagged.insert(static_cast<int>(value));
        }
        value = -1;
    };
    for (char c : response) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            value = (value < 0 ? 0 : value) * 10 + (c - '0');
            if (value > 1'000'000'000) value = 1'000'000'001; // overflow guard; filtered below
        } else if (value >= 0) {
            commit();
        }
    }
    if (value >= 0) commit();
    return ann;
}

namespace detail {

inline std::string fenced(const std::string& text) {
    return "```\n" + text + "\n```\n";
}

inline std::string failing_test_section(const FailingTestInfo& info) {
    if (info.source == FailingSource::COMPILER) {
        return "## Compiler Diagnostics\nThe program failed to compile. Compiler output:\n" +
               fenced(info.diagnostics.value_or("")) + "\n";
    }
    std::string out = "## Failing Test\n";
    if (info.test_id) out += "Test id: " + *info.test_id + "\n";
    if (info.verdict) out += "Verdict: " + verdict_to_string(*info.verdict) + "\n";
    if (info.input) out += "Input:\n" + fenced(*info.input);
    if (info.expected_output) out += "Expected output:\n" + fenced(*info.expected_output);
    if (info.actual_output) out += "Actual output:\n" + fenced(*info.actual_output);
    return out + "\n";
}

inline std::string numbered_program(const FlatProgram& program) {
    std::string out;
    for (int g = 1; g <= program.size(); ++g) {
        out += std::to_string(g) + ": " + program.lines[static_cast<std::size_t>(g - 1)];
        if (g < program.size()) out += '\n';
    }
    return out;
}

inline std::string marker_instruction(bool collapse_allowed) {
    std::string out =
        "## Instructions\n"
        "Return the complete program inside a single fenced code block. Mark every faulty "
        "line by appending the marker " +
        std::string(kMarkerToken) +
        " at the end of that line, followed by a concise explanation of the fault on the "
        "same line. Keep every other line unchanged and do not fix the code.";
    if (collapse_allowed) {
        out +=
            " The program is long: you may collapse non-essential code sections into a "
            "single line containing only ... so the output stays short.";
    }
    return out + "\n";
}

inline std::string line_numbers_instruction() {
    return "## Instructions\n"
           "Reply with the line numbers of the faulty lines as a comma-separated list of "
           "integers (for example: 3, 7). Do not return code.\n";
}

} // namespace detail

// Assembles the user prompt: statement, failing test, reference, the faulty
// program, then the output-format instruction.
inline PromptBundle build_prompt(const AuxiliaryContext& ctx, const FlatProgram& program,
                                 AnnotationMode mode, bool collapse_allowed,
                                 const PromptTemplates& templates = {}) {
    std::map<std::string, std::string> values;
    values["statement"] =
        ctx.statement ? "## Problem Statement\n" + *ctx.statement + "\n\n" : "";
    values["failing_test"] =
        ctx.failing_test ? detail::failing_test_section(*ctx.failing_test) : "";
    values["reference"] =
        ctx.reference ? "## Reference Program\nAn accepted submission to the same problem:\n" +
                            detail::fenced(ctx.reference->text()) + "\n"
                      : "";
    values["program"] =
        "## Faulty Program\n" + detail::fenced(mode == AnnotationMode::LINE_NUMBERS
                                                   ? detail::numbered_program(program)
                                                   : program.text()) +
        "\n";
    values["format_instruction"] = mode == AnnotationMode::MARKER
                                       ? detail::marker_instruction(collapse_allowed)
                                       : detail::line_numbers_instruction();

    PromptBundle bundle;
    bundle.mode = mode;
    bundle.system = templates.annotate_system;
    bundle.user = fill_template(templates.annotate_user, values);
    return bundle;
}

struct AnnotateOptions {
    int collapse_threshold_lines = 600;
    double similarity_threshold = 0.9;
    PromptTemplates templates;
};

// One (model, round) annotation pass: prompt, complete, parse.
inline Annotation annotate_once(const LlmClient& client, const ChatBackend& backend,
                                const AuxiliaryContext& ctx, const FlatProgram& program,
                                AnnotationMode mode, const CompletionParams& params,
                                int round = 1, const AnnotateOptions& options = {}) {
    bool collapse_allowed = program.size() > options.collapse_threshold_lines;
    PromptBundle bundle = build_prompt(ctx, program, mode, collapse_allowed, options.templates);
    std::string response = client.complete(backend, bundle.system, bundle.user, params);
    if (mode == AnnotationMode::LINE_NUMBERS) {
        return parse_line_numbers(response, program, backend.name, round);
    }
    return parse_annotations(response, program, backend.name, round,
                             options.similarity_threshold);
}

} // namespace flame
