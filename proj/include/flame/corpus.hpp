#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flame/diff.hpp"
#include "flame/error.hpp"
#include "flame/util.hpp"

namespace flame {

enum class Language { C, CPP, JAVA };

inline Language language_from_string(const std::string& s) {
    std::string l = lowercase(s);
    if (l == "c") return Language::C;
    if (l == "cpp" || l == "c++" || l == "cxx") return Language::CPP;
    if (l == "java") return Language::JAVA;
    throw DatasetError("unknown language: " + s);
}

inline std::string language_to_string(Language lang) {
    switch (lang) {
        case Language::C: return "c";
        case Language::CPP: return "cpp";
        case Language::JAVA: return "java";
    }
    return "c";
}

struct Test {
    std::string id;
    std::string input;
    std::string expected_output;
};

struct Sample {
    std::string input;
    std::string expected_output;
    std::optional<std::string> note;
};

struct Problem {
    std::string id;
    std::string description;
    std::string input_spec;
    std::string output_spec;
    std::vector<Sample> samples;
    std::vector<Test> tests;
    int time_limit_ms = 0;
    int memory_limit_mb = 0;
};

struct SourceFile {
    std::string path; // relative, '/'-separated
    std::string content;
};

struct Submission {
    std::vector<SourceFile> files; // lexicographic path order
    Language language = Language::C;
};

struct SourceLoc {
    std::string path;
    int line = 0; // 1-based local line
};

// A submission rendered as one numbered document. Multi-file projects get
// one header line per file; single files keep the identity mapping.
struct FlatProgram {
    std::vector<std::string> lines;               // global line g is lines[g-1]
    std::vector<std::optional<SourceLoc>> source; // parallel; nullopt on header lines
    std::map<std::pair<std::string, int>, int> to_global;

    int size() const { return static_cast<int>(lines.size()); }
    bool is_header(int global_line) const {
        return !source[static_cast<std::size_t>(global_line - 1)].has_value();
    }
    std::string text() const { return join_lines(lines); }
};

struct GroundTruth {
    std::set<std::pair<std::string, int>> faulty_lines; // (path, local line)
};

inline constexpr const char* kFileHeaderPrefix = "==== FILE: ";
inline constexpr const char* kFileHeaderSuffix = " ====";

inline std::string file_header_line(const std::string& path) {
    return std::string(kFileHeaderPrefix) + path + kFileHeaderSuffix;
}

// ---------------------------------------------------------------------------
// statement.md parsing
//
// Layout: top-level sections "# Description", "# Input", "# Output",
// "# Samples". Inside Samples, each "## Sample <k>" holds "### Input" and
// "### Output" fenced code blocks plus an optional "### Note" text body.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fenced_or_raw(const std::vector<std::string>& body) {
    std::vector<std::string> content;
    bool in_fence = false, saw_fence = false;
    for (const auto& line : body) {
        if (starts_with(strip(line), "```")) {
            if (in_fence) break;
            in_fence = true;
            saw_fence = true;
            continue;
        }
        if (in_fence) content.push_back(line);
    }
    if (saw_fence) return join_lines(content);
    return strip(join_lines(body));
}

struct StatementSections {
    std::string description;
    std::string input_spec;
    std::string output_spec;
    std::vector<Sample> samples;
};

inline std::vector<Sample> parse_samples(const std::vector<std::string>& body) {
    std::vector<Sample> samples;
    std::vector<std::vector<std::string>> groups;
    for (const auto& line : body) {
        if (starts_with(line, "## ")) {
            groups.emplace_back();
            continue;
        }
        if (!groups.empty()) groups.back().push_back(line);
    }
    for (const auto& group : groups) {
        Sample sample;
        std::string field;
        std::vector<std::string> acc;
        auto commit = [&]() {
            if (field == "input") sample.input = fenced_or_raw(acc);
            else if (field == "output") sample.expected_output = fenced_or_raw(acc);
            else if (field == "note") sample.note = strip(join_lines(acc));
            acc.clear();
        };
        for (const auto& line : group) {
            if (starts_with(line, "### ")) {
                commit();
                field = lowercase(strip(line.substr(4)));
            } else {
                acc.push_back(line);
            }
        }
        commit();
        samples.push_back(std::move(sample));
    }
    return samples;
}

inline StatementSections parse_statement(const std::string& text) {
    StatementSections out;
    std::map<std::string, std::vector<std::string>> sections;
    std::string current;
    for (const auto& line : split_lines(text)) {
        if (starts_with(line, "# ") && !starts_with(line, "## ")) {
            current = lowercase(strip(line.substr(2)));
            sections[current];
            continue;
        }
        if (!current.empty()) sections[current].push_back(line);
    }
    auto body_of = [&](const char* name) -> std::string {
        auto it = sections.find(name);
        return it == sections.end() ? std::string() : strip(join_lines(it->second));
    };
    out.description = body_of("description");
    out.input_spec = body_of("input");
    out.output_spec = body_of("output");
    if (auto it = sections.find("samples"); it != sections.end()) {
        out.samples = parse_samples(it->second);
    }
    return out;
}

inline const std::vector<std::string>& extensions_for(Language lang) {
    static const std::vector<std::string> c_exts = {".c", ".h"};
    static const std::vector<std::string> cpp_exts = {".cpp", ".cc", ".cxx", ".hpp", ".hh", ".h"};
    static const std::vector<std::string> java_exts = {".java"};
    switch (lang) {
        case Language::C: return c_exts;
        case Language::CPP: return cpp_exts;
        case Language::JAVA: return java_exts;
    }
    return c_exts;
}

} // namespace detail

// ---------------------------------------------------------------------------
// loaders
// ---------------------------------------------------------------------------

inline Problem load_problem(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DatasetError("problem directory not found: " + dir.string());

    fs::path statement_path = dir / "statement.md";
    if (!fs::is_regular_file(statement_path)) {
        throw DatasetError("missing statement file: " + statement_path.string());
    }
    auto sections = detail::parse_statement(normalize_newlines(read_file(statement_path)));

    Problem prob;
    prob.id = dir.filename().string();
    prob.description = sections.description;
    prob.input_spec = sections.input_spec;
    prob.output_spec = sections.output_spec;
    prob.samples = std::move(sections.samples);

    fs::path limits_path = dir / "limits.json";
    if (!fs::is_regular_file(limits_path)) {
        throw DatasetError("missing limits file: " + limits_path.string());
    }
    nlohmann::json limits;
    try {
        limits = nlohmann::json::parse(read_file(limits_path));
        prob.time_limit_ms = limits.at("time_limit_ms").get<int>();
        prob.memory_limit_mb = limits.at("memory_limit_mb").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError("malformed limits file: " + std::string(e.what()));
    }
    if (prob.time_limit_ms <= 0 || prob.memory_limit_mb <= 0) {
        throw DatasetError("invalid limit in " + limits_path.string());
    }

    fs::path tests_dir = dir / "tests";
    if (!fs::is_directory(tests_dir)) throw DatasetError("no tests: " + tests_dir.string());
    std::map<std::string, Test> tests;
    for (const auto& entry : fs::directory_iterator(tests_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".in") continue;
        std::string id = entry.path().stem().string();
        fs::path out_path = tests_dir / (id + ".out");
        if (!fs::is_regular_file(out_path)) {
            throw DatasetError("test " + id + " has no .out file");
        }
        tests[id] = Test{id, normalize_newlines(read_file(entry.path())),
                         normalize_newlines(read_file(out_path))};
    }
    if (tests.empty()) throw DatasetError("no tests: " + tests_dir.string());
    for (auto& [_, t] : tests) prob.tests.push_back(std::move(t)); // map iterates in id order
    return prob;
}

// Reads meta.json {"language": "c"|"cpp"|"java"} next to the statement.
inline Language load_language(const fs::path& problem_dir) {
    fs::path meta_path = problem_dir / "meta.json";
    if (!fs::is_regular_file(meta_path)) throw DatasetError("missing meta file: " + meta_path.string());
    try {
        auto meta = nlohmann::json::parse(read_file(meta_path));
        return language_from_string(meta.at("language").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError("malformed meta file: " + std::string(e.what()));
    }
}

inline Submission load_submission(const fs::path& dir, Language language) {
    if (!fs::is_directory(dir)) throw DatasetError("submission directory not found: " + dir.string());
    const auto& exts = detail::extensions_for(language);
    Submission sub;
    sub.language = language;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = lowercase(entry.path().extension().string());
        if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
        std::string rel = fs::relative(entry.path(), dir).generic_string();
        sub.files.push_back({rel, normalize_newlines(read_file(entry.path()))});
    }
    if (sub.files.empty()) {
        throw DatasetError("no source files for language " + language_to_string(language) +
                           " in " + dir.string());
    }
    std::sort(sub.files.begin(), sub.files.end(),
              [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
    return sub;
}

// ---------------------------------------------------------------------------
// flattening
// ---------------------------------------------------------------------------

inline FlatProgram flatten(const Submission& sub) {
    FlatProgram fp;
    const bool multi = sub.files.size() > 1;
    for (const auto& file : sub.files) {
        if (multi) {
            fp.lines.push_back(file_header_line(file.path));
            fp.source.push_back(std::nullopt);
        }
        int local = 1;
        for (auto& line : split_lines(file.content)) {
            fp.lines.push_back(line);
            fp.source.push_back(SourceLoc{file.path, local});
            fp.to_global[{file.path, local}] = static_cast<int>(fp.lines.size());
            ++local;
        }
    }
    return fp;
}

inline SourceLoc unflatten_line(const FlatProgram& fp, int global_line) {
    if (global_line < 1 || global_line > fp.size()) {
        throw Error("global line out of range: " + std::to_string(global_line));
    }
    const auto& loc = fp.source[static_cast<std::size_t>(global_line - 1)];
    if (!loc) throw Error("global line " + std::to_string(global_line) + " is a file header");
    return *loc;
}

// ---------------------------------------------------------------------------
// ground truth from faulty/fixed pairs
// ---------------------------------------------------------------------------

// Faulty-side lines of every non-equal hunk; a pure insertion in the fixed
// version is attributed to the faulty line right after the insertion point
// (the last line when the insertion is at end of file). Lines are compared
// after stripping trailing whitespace.
inline GroundTruth ground_truth_lines(const Submission& faulty, const Submission& fixed) {
    auto paths_of = [](const Submission& s) {
        std::set<std::string> out;
        for (const auto& f : s.files) out.insert(f.path);
        return out;
    };
    if (paths_of(faulty) != paths_of(fixed)) {
        throw DatasetError("file creation/deletion pair");
    }

    std::map<std::string, const SourceFile*> fixed_by_path;
    for (const auto& f : fixed.files) fixed_by_path[f.path] = &f;

    GroundTruth gt;
    for (const auto& file : faulty.files) {
        auto strip_all = [](const std::string& content) {
            std::vector<std::string> out;
            for (auto& line : split_lines(content)) out.push_back(rstrip(line));
            return out;
        };
        auto a = strip_all(file.content);
        auto b = strip_all(fixed_by_path.at(file.path)->content);
        const int n = static_cast<int>(a.size());
        for (const auto& hunk : diff_hunks(a, b)) {
            if (hunk.a_end > hunk.a_begin) {
                for (int line = hunk.a_begin + 1; line <= hunk.a_end; ++line) {
                    gt.faulty_lines.insert({file.path, line});
                }
            } else if (n > 0) {
                int line = hunk.a_begin < n ? hunk.a_begin + 1 : n;
                gt.faulty_lines.insert({file.path, line});
            }
        }
    }
    return gt;
}

// Accepted-history pool under <problem_dir>/history/<n>/, in directory-name
// order. Missing history directory means an empty pool.
inline std::vector<Submission> load_history_pool(const fs::path& problem_dir, Language language) {
    std::vector<Submission> pool;
    fs::path history = problem_dir / "history";
    if (!fs::is_directory(history)) return pool;
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(history)) {
        if (entry.is_directory()) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) pool.push_back(load_submission(dir, language));
    return pool;
}

} // namespace flame
