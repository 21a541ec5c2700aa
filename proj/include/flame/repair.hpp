#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flame/annotate.hpp"
#include "flame/context.hpp"
#include "flame/corpus.hpp"
#include "flame/judge.hpp"
#include "flame/llm.hpp"
#include "flame/vote.hpp"

namespace flame {

enum class RepairSetting { PLAIN, ASSISTED };

inline std::string repair_setting_to_string(RepairSetting s) {
    return s == RepairSetting::PLAIN ? "plain" : "assisted";
}

struct RepairOutcome {
    std::string program_id;
    RepairSetting setting = RepairSetting::PLAIN;
    int before_pass = 0;
    int after_pass = 0;
    int total_tests = 0;
    bool compiled = false;
};

inline bool is_fixed(const RepairOutcome& o) {
    return o.compiled && o.after_pass == o.total_tests;
}

inline bool is_improved(const RepairOutcome& o) {
    return o.compiled && o.after_pass > o.before_pass;
}

namespace detail {

inline std::string localization_section(const SuspiciousnessRanking& fl, int top_lines,
                                        const FlatProgram& program) {
    std::string out = "## Fault Localization\nThe most suspicious lines, most suspicious "
                      "first:\n";
    int listed = 0;
    for (int line : fl.order) {
        if (fl.score_of(line) <= 0.0) break;
        if (listed == top_lines) break;
        out += "- line " + std::to_string(line) + ": `" +
               program.lines[static_cast<std::size_t>(line - 1)] + "`";
        auto it = fl.explanations.find(line);
        if (it != fl.explanations.end()) out += " — " + it->second.text;
        out += "\n";
        ++listed;
    }
    return out + "\n";
}

} // namespace detail

// PLAIN: program, statement, test outcomes. ASSISTED additionally lists the
// top suspicious lines with their explanations.
inline PromptBundle build_repair_prompt(const AuxiliaryContext& ctx, const FlatProgram& program,
                                        const std::optional<SuspiciousnessRanking>& fl,
                                        const PromptTemplates& templates = {},
                                        int top_lines = 5) {
    std::map<std::string, std::string> values;
    values["statement"] =
        ctx.statement ? "## Problem Statement\n" + *ctx.statement + "\n\n" : "";
    values["failing_test"] =
        ctx.failing_test ? detail::failing_test_section(*ctx.failing_test) : "";
    values["localization"] = fl ? detail::localization_section(*fl, top_lines, program) : "";
    values["program"] = "## Faulty Program\n" + detail::fenced(program.text()) + "\n";
    values["format_instruction"] =
        "## Instructions\n"
        "Return the full repaired program in a single fenced code block. For multi-file "
        "projects, start each file's section with a line of the form `" +
        file_header_line("<path>") + "`.\n";

    PromptBundle bundle;
    bundle.mode = AnnotationMode::MARKER;
    bundle.system = templates.repair_system;
    bundle.user = fill_template(templates.repair_user, values);
    return bundle;
}

// Rebuilds a submission from the model's response. Single-file projects take
// the last fenced block verbatim; multi-file projects are parsed per the
// flatten header format, keeping original content for files not mentioned.
inline Submission extract_program(const std::string& response, const Submission& original) {
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
    if (blocks.empty()) throw Error("unparseable repair: no fenced code block");

    auto parse_sections = [](const std::vector<std::string>& code) {
        std::map<std::string, std::string> sections;
        std::string current;
        std::vector<std::string> acc;
        auto commit = [&]() {
            if (!current.empty()) sections[current] = join_lines(acc) + "\n";
            acc.clear();
        };
        for (const auto& line : code) {
            std::string stripped = strip(line);
            if (starts_with(stripped, kFileHeaderPrefix) &&
                stripped.size() > std::string(kFileHeaderPrefix).size() +
                                      std::string(kFileHeaderSuffix).size() &&
                stripped.compare(stripped.size() - std::string(kFileHeaderSuffix).size(),
                                 std::string(kFileHeaderSuffix).size(),
                                 kFileHeaderSuffix) == 0) {
                commit();
                current = strip(stripped.substr(
                    std::string(kFileHeaderPrefix).size(),
                    stripped.size() - std::string(kFileHeaderPrefix).size() -
                        std::string(kFileHeaderSuffix).size()));
            } else if (!current.empty()) {
                acc.push_back(line);
            }
        }
        commit();
        return sections;
    };

    Submission repaired = original;
    if (original.files.size() == 1) {
        const auto& block = blocks.back();
        auto sections = parse_sections(block);
        auto it = sections.find(original.files[0].path);
        repaired.files[0].content =
            it != sections.end() ? it->second : join_lines(block) + "\n";
        return repaired;
    }

    std::map<std::string, std::string> merged;
    for (const auto& block : blocks) {
        for (auto& [path, content] : parse_sections(block)) merged[path] = content;
    }
    for (auto& file : repaired.files) {
        auto it = merged.find(file.path);
        if (it != merged.end()) file.content = it->second;
    }
    return repaired;
}

struct RepairEntry {
    std::string program_id;
    Problem problem;
    Submission faulty;
    std::optional<SuspiciousnessRanking> localization; // required for ASSISTED
};

struct RepairSummary {
    std::map<RepairSetting, int> fixed;
    std::map<RepairSetting, int> improved;
    std::map<RepairSetting, int> total;
    // plain-state -> assisted-state program counts; states are
    // "fixed" / "improved" / "failed".
    std::map<std::pair<std::string, std::string>, int> flow;
};

struct RepairExperiment {
    std::vector<RepairOutcome> outcomes;
    RepairSummary summary;
};

namespace detail {

inline std::string repair_state(const RepairOutcome& o) {
    if (is_fixed(o)) return "fixed";
    if (is_improved(o)) return "improved";
    return "failed";
}

} // namespace detail

// Single-shot repair per (program, setting); per-program failures count as
// not fixed and the run continues.
inline RepairExperiment run_experiment(const std::vector<RepairEntry>& entries,
                                       const LlmClient& client, const ChatBackend& backend,
                                       const std::vector<RepairSetting>& settings,
                                       const fs::path& work_root,
                                       const CompletionParams& params = {},
                                       const ToolchainConfig& tc = {},
                                       const PromptTemplates& templates = {},
                                       int top_lines = 5, std::size_t truncate_cap = 4096) {
    RepairExperiment experiment;
    std::map<std::string, std::map<RepairSetting, std::string>> states;

    int workdir_seq = 0;
    for (const auto& entry : entries) {
        fs::path before_dir = work_root / ("w" + std::to_string(workdir_seq++));
        JudgeResult before = judge_all(entry.faulty, entry.problem, before_dir, tc);
        int before_pass = 0;
        for (const auto& o : before.outcomes) {
            if (o.verdict == Verdict::AC) ++before_pass;
        }
        FlatProgram flat = flatten(entry.faulty);
        AuxiliaryContext ctx =
            build_context(entry.problem, before, std::nullopt, ContextToggles{}, truncate_cap);

        for (RepairSetting setting : settings) {
            RepairOutcome outcome;
            outcome.program_id = entry.program_id;
            outcome.setting = setting;
            outcome.before_pass = before_pass;
            outcome.total_tests = static_cast<int>(entry.problem.tests.size());

            try {
                std::optional<SuspiciousnessRanking> fl;
                if (setting == RepairSetting::ASSISTED) {
                    if (!entry.localization) throw Error("assisted repair needs localization");
                    fl = entry.localization;
                }
                PromptBundle bundle = build_repair_prompt(ctx, flat, fl, templates, top_lines);
                std::string response =
                    client.complete(backend, bundle.system, bundle.user, params);
                Submission repaired = extract_program(response, entry.faulty);

                fs::path after_dir = work_root / ("w" + std::to_string(workdir_seq++));
                JudgeResult after = judge_all(repaired, entry.problem, after_dir, tc);
                outcome.compiled = after.compiled();
                for (const auto& o : after.outcomes) {
                    if (o.verdict == Verdict::AC) ++outcome.after_pass;
                }
            } catch (const Error&) {
                outcome.compiled = false;
                outcome.after_pass = 0;
            }

            states[entry.program_id][setting] = detail::repair_state(outcome);
            experiment.summary.total[setting] += 1;
            if (is_fixed(outcome)) experiment.summary.fixed[setting] += 1;
            if (is_improved(outcome)) experiment.summary.improved[setting] += 1;
            experiment.outcomes.push_back(std::move(outcome));
        }
    }

    for (const auto& [_, by_setting] : states) {
        auto plain = by_setting.find(RepairSetting::PLAIN);
        auto assisted = by_setting.find(RepairSetting::ASSISTED);
        if (plain != by_setting.end() && assisted != by_setting.end()) {
            experiment.summary.flow[{plain->second, assisted->second}] += 1;
        }
    }
    return experiment;
}

} // namespace flame
