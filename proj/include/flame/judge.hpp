#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flame/corpus.hpp"
#include "flame/process.hpp"

namespace flame {

enum class Verdict { AC, WA, RE, TLE, MLE, CE };

inline std::string verdict_to_string(Verdict v) {
    switch (v) {
        case Verdict::AC: return "AC";
        case Verdict::WA: return "WA";
        case Verdict::RE: return "RE";
        case Verdict::TLE: return "TLE";
        case Verdict::MLE: return "MLE";
        case Verdict::CE: return "CE";
    }
    return "RE";
}

struct CompileResult {
    bool success = false;
    std::string diagnostics;
    std::optional<fs::path> artifact_path;
};

struct TestOutcome {
    std::string test_id;
    Verdict verdict = Verdict::RE;
    std::optional<std::string> actual_output; // present iff AC or WA
    long long wall_time_ms = 0;
    std::optional<int> peak_memory_mb;
};

// Compile/run command templates. {output} is the artifact path, {sources}
// expands to all translation units, {classpath}/{main_class} apply to Java.
struct ToolchainConfig {
    std::string c_compile = "cc -O2 -o {output} {sources}";
    std::string cpp_compile = "c++ -O2 -std=c++17 -o {output} {sources}";
    std::string java_compile = "javac {sources}";
    std::string java_run = "java -cp {classpath} {main_class}";
    std::string java_main_class = "Main";
    std::string gcov = "gcov";
};

struct Limits {
    int time_limit_ms = 0;
    int memory_limit_mb = 0;
};

// How to execute a compiled submission.
struct Artifact {
    std::vector<std::string> run_argv;
    fs::path workdir;
};

namespace detail {

inline std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> out;
    std::istringstream ss(command);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

// Translation units only; headers are on disk but not passed to the compiler.
inline bool is_translation_unit(const std::string& path, Language lang) {
    auto ends_with = [&](const char* ext) {
        std::string low = lowercase(path);
        std::string e = ext;
        return low.size() >= e.size() && low.compare(low.size() - e.size(), e.size(), e) == 0;
    };
    switch (lang) {
        case Language::C: return ends_with(".c");
        case Language::CPP: return ends_with(".cpp") || ends_with(".cc") || ends_with(".cxx");
        case Language::JAVA: return ends_with(".java");
    }
    return false;
}

inline std::vector<std::string> expand_command(const std::string& command,
                                               const std::vector<std::string>& sources,
                                               const std::string& output,
                                               const ToolchainConfig& tc,
                                               const fs::path& workdir) {
    std::vector<std::string> argv;
    for (const auto& tok : split_command(command)) {
        if (tok == "{sources}") {
            argv.insert(argv.end(), sources.begin(), sources.end());
        } else if (tok == "{output}") {
            argv.push_back(output);
        } else if (tok == "{classpath}") {
            argv.push_back(workdir.string());
        } else if (tok == "{main_class}") {
            argv.push_back(tc.java_main_class);
        } else {
            argv.push_back(tok);
        }
    }
    return argv;
}

inline void write_submission_files(const Submission& sub, const fs::path& workdir) {
    for (const auto& file : sub.files) {
        fs::path dest = workdir / file.path;
        fs::create_directories(dest.parent_path());
        write_file(dest, file.content);
    }
}

// Runaway programs can emit unbounded output; cap what we keep.
inline constexpr std::size_t kMaxCapturedOutput = 64ull * 1024 * 1024;

inline std::string read_capped(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::string out;
    out.resize(kMaxCapturedOutput);
    in.read(out.data(), static_cast<std::streamsize>(out.size()));
    out.resize(static_cast<std::size_t>(in.gcount()));
    return out;
}

} // namespace detail

// OJ convention: equal after stripping trailing whitespace per line and
// trailing blank lines.
inline bool compare_output(const std::string& actual, const std::string& expected) {
    auto canonical = [](const std::string& text) {
        std::vector<std::string> lines = split_lines(text);
        for (auto& line : lines) line = rstrip(line);
        while (!lines.empty() && lines.back().empty()) lines.pop_back();
        return lines;
    };
    return canonical(actual) == canonical(expected);
}

inline CompileResult compile(const Submission& sub, const fs::path& workdir,
                             const ToolchainConfig& tc = {}) {
    fs::create_directories(workdir);
    detail::write_submission_files(sub, workdir);

    std::vector<std::string> sources;
    for (const auto& file : sub.files) {
        if (detail::is_translation_unit(file.path, sub.language)) sources.push_back(file.path);
    }
    if (sources.empty()) throw DatasetError("no translation units to compile");

    const std::string* command = nullptr;
    std::string output = "main";
    switch (sub.language) {
        case Language::C: command = &tc.c_compile; break;
        case Language::CPP: command = &tc.cpp_compile; break;
        case Language::JAVA: command = &tc.java_compile; break;
    }
    auto argv = detail::expand_command(*command, sources, output, tc, workdir);

    fs::path diag_path = workdir / "__compile_log.txt";
    ProcessLimits limits;
    limits.wall_time_ms = 60'000;
    auto res = run_process(argv, workdir, std::nullopt, diag_path, diag_path, limits);

    CompileResult cr;
    cr.diagnostics = detail::read_capped(diag_path);
    cr.success = res.normal_exit() && res.exit_code == 0;
    if (cr.success) {
        cr.artifact_path = sub.language == Language::JAVA ? workdir : workdir / output;
    } else if (cr.diagnostics.empty()) {
        cr.diagnostics = res.timed_out
                             ? "compiler timed out"
                             : "compiler exited with code " + std::to_string(res.exit_code);
    }
    return cr;
}

inline Artifact make_artifact(const CompileResult& cr, Language lang,
                              const ToolchainConfig& tc = {}) {
    if (!cr.success || !cr.artifact_path) throw Error("no artifact to run");
    Artifact art;
    if (lang == Language::JAVA) {
        art.workdir = *cr.artifact_path;
        art.run_argv = detail::expand_command(tc.java_run, {}, "", tc, art.workdir);
    } else {
        art.workdir = cr.artifact_path->parent_path();
        art.run_argv = {cr.artifact_path->string()};
    }
    return art;
}

inline TestOutcome run_test(const Artifact& artifact, const Test& test, const Limits& limits) {
    if (limits.time_limit_ms <= 0 || limits.memory_limit_mb <= 0) {
        throw Error("limits must be positive");
    }
    fs::path in_path = artifact.workdir / "__test_in.txt";
    fs::path out_path = artifact.workdir / "__test_out.txt";
    fs::path err_path = artifact.workdir / "__test_err.txt";
    write_file(in_path, test.input);

    ProcessLimits plimits;
    plimits.wall_time_ms = limits.time_limit_ms;
    // Headroom above the verdict threshold so peak RSS can be observed;
    // allocation failure past the hard cap degrades MLE to RE.
    plimits.address_space_mb = limits.memory_limit_mb * 2 + 64;

    auto res = run_process(artifact.run_argv, artifact.workdir, in_path, out_path, err_path,
                           plimits);

    TestOutcome outcome;
    outcome.test_id = test.id;
    outcome.wall_time_ms = res.wall_time_ms;
    if (res.peak_rss_mb >= 0) outcome.peak_memory_mb = static_cast<int>(res.peak_rss_mb);

    if (res.timed_out || res.wall_time_ms > limits.time_limit_ms) {
        outcome.verdict = Verdict::TLE;
    } else if (res.peak_rss_mb > limits.memory_limit_mb) {
        outcome.verdict = Verdict::MLE;
    } else if (!res.normal_exit() || res.exit_code != 0) {
        outcome.verdict = Verdict::RE;
    } else {
        std::string actual = detail::read_capped(out_path);
        outcome.verdict = compare_output(actual, test.expected_output) ? Verdict::AC : Verdict::WA;
        outcome.actual_output = std::move(actual);
    }
    return outcome;
}

struct JudgeResult {
    CompileResult compile;
    std::vector<TestOutcome> outcomes; // test-id order; empty on compile failure

    bool compiled() const { return compile.success; }
    bool accepted() const {
        if (!compiled() || outcomes.empty()) return false;
        for (const auto& o : outcomes) {
            if (o.verdict != Verdict::AC) return false;
        }
        return true;
    }
};

inline JudgeResult judge_all(const Submission& sub, const Problem& prob, const fs::path& workdir,
                             const ToolchainConfig& tc = {}) {
    JudgeResult result;
    result.compile = compile(sub, workdir, tc);
    if (!result.compile.success) return result;
    Artifact artifact = make_artifact(result.compile, sub.language, tc);
    Limits limits{prob.time_limit_ms, prob.memory_limit_mb};
    for (const auto& test : prob.tests) {
        result.outcomes.push_back(run_test(artifact, test, limits));
    }
    return result;
}

} // namespace flame
