#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "flame/judge.hpp"
#include "flame/vote.hpp"

namespace flame {

struct CoverageRow {
    std::string test_id;
    bool passed = false;
    std::set<int> covered; // global lines
};

struct CoverageMatrix {
    int n = 0; // program length
    std::vector<CoverageRow> tests;
};

// Per-line execution counts split by failing/passing tests.
struct SpectrumCounts {
    int e_f = 0;
    int e_p = 0;
    int n_f = 0;
    int n_p = 0;
};

// e_f / sqrt((e_f + n_f) * (e_f + e_p)); 0 when the numerator or the
// denominator vanishes.
inline double ochiai(const SpectrumCounts& c) {
    if (c.e_f == 0) return 0.0;
    double denom = std::sqrt(static_cast<double>(c.e_f + c.n_f) *
                             static_cast<double>(c.e_f + c.e_p));
    if (denom == 0.0) return 0.0;
    return static_cast<double>(c.e_f) / denom;
}

inline SuspiciousnessRanking rank_from_coverage(const CoverageMatrix& m) {
    int failing = 0, passing = 0;
    for (const auto& row : m.tests) (row.passed ? passing : failing)++;

    std::map<int, double> scores;
    for (int line = 1; line <= m.n; ++line) {
        SpectrumCounts c;
        for (const auto& row : m.tests) {
            bool executed = row.covered.count(line) > 0;
            if (row.passed) {
                (executed ? c.e_p : c.n_p)++;
            } else {
                (executed ? c.e_f : c.n_f)++;
            }
        }
        double s = ochiai(c);
        if (s > 0.0) scores[line] = s;
    }

    SuspiciousnessRanking ranking;
    ranking.n = m.n;
    ranking.scores = scores;
    ranking.order = rank(scores, m.n);
    return ranking;
}

namespace detail {

// One gcov text-report section per translation unit: "Source:<path>" header
// then "count:lineno:source" rows. A numeric count means the line ran.
inline std::map<std::string, std::set<int>> parse_gcov_text(const std::string& text) {
    std::map<std::string, std::set<int>> covered;
    std::string current;
    for (const auto& raw : split_lines(text)) {
        auto first = raw.find(':');
        if (first == std::string::npos) continue;
        auto second = raw.find(':', first + 1);
        if (second == std::string::npos) continue;
        std::string count = strip(raw.substr(0, first));
        std::string field = strip(raw.substr(first + 1, second - first - 1));
        if (count == "-" && field == "0") {
            std::string rest = raw.substr(second + 1);
            if (starts_with(rest, "Source:")) current = strip(rest.substr(7));
            continue;
        }
        if (current.empty() || count.empty() || count == "-" || count[0] == '#' ||
            count[0] == '=') {
            continue;
        }
        // counts like "12" or "12*"
        bool numeric = true;
        long long value = 0;
        for (char c : count) {
            if (std::isdigit(static_cast<unsigned char>(c))) value = value * 10 + (c - '0');
            else if (c == '*') continue;
            else { numeric = false; break; }
        }
        if (!numeric || value <= 0) continue;
        try {
            covered[current].insert(std::stoi(field));
        } catch (...) {
            continue;
        }
    }
    return covered;
}

} // namespace detail

// Compiles with gcov instrumentation, runs every test under the judge's
// limits, and maps per-file covered lines into global lines. Crashing or
// killed runs contribute whatever coverage was flushed before death.
inline CoverageMatrix collect_coverage(const Submission& sub, const Problem& prob,
                                       const fs::path& workdir,
                                       const ToolchainConfig& tc = {}) {
    if (sub.language == Language::JAVA) {
        throw EnvironmentError("line-coverage instrumentation is not supported for java");
    }
    fs::create_directories(workdir);
    detail::write_submission_files(sub, workdir);

    const std::string compiler =
        detail::split_command(sub.language == Language::C ? tc.c_compile : tc.cpp_compile)
            .at(0);
    std::vector<std::string> std_flags;
    for (const auto& tok :
         detail::split_command(sub.language == Language::C ? tc.c_compile : tc.cpp_compile)) {
        if (starts_with(tok, "-std")) std_flags.push_back(tok);
    }

    // Per-TU objects give predictable .gcno/.gcda names even for sources in
    // subdirectories.
    std::vector<std::string> sources, objects;
    for (const auto& file : sub.files) {
        if (detail::is_translation_unit(file.path, sub.language)) sources.push_back(file.path);
    }
    if (sources.empty()) throw DatasetError("no translation units to instrument");

    fs::path log_path = workdir / "__coverage_log.txt";
    ProcessLimits compile_limits;
    compile_limits.wall_time_ms = 60'000;
    for (std::size_t k = 0; k < sources.size(); ++k) {
        std::string obj = "cov_" + std::to_string(k) + ".o";
        std::vector<std::string> argv = {compiler, "--coverage", "-O0"};
        argv.insert(argv.end(), std_flags.begin(), std_flags.end());
        argv.insert(argv.end(), {"-c", sources[k], "-o", obj});
        auto res = run_process(argv, workdir, std::nullopt, log_path, log_path, compile_limits);
        if (!res.normal_exit() || res.exit_code != 0) {
            throw Error("coverage compile failed for " + sources[k] + ": " +
                        detail::read_capped(log_path));
        }
        objects.push_back(obj);
    }
    {
        std::vector<std::string> argv = {compiler, "--coverage"};
        argv.insert(argv.end(), objects.begin(), objects.end());
        argv.insert(argv.end(), {"-o", "main"});
        auto res = run_process(argv, workdir, std::nullopt, log_path, log_path, compile_limits);
        if (!res.normal_exit() || res.exit_code != 0) {
            throw Error("coverage link failed: " + detail::read_capped(log_path));
        }
    }

    FlatProgram flat = flatten(sub);
    Artifact artifact{{(workdir / "main").string()}, workdir};
    Limits limits{prob.time_limit_ms, prob.memory_limit_mb};

    CoverageMatrix matrix;
    matrix.n = flat.size();
    for (const auto& test : prob.tests) {
        for (const auto& entry : fs::directory_iterator(workdir)) {
            if (entry.path().extension() == ".gcda") fs::remove(entry.path());
        }

        TestOutcome outcome = run_test(artifact, test, limits);

        CoverageRow row;
        row.test_id = test.id;
        row.passed = outcome.verdict == Verdict::AC;
        for (std::size_t k = 0; k < objects.size(); ++k) {
            fs::path gcda = workdir / ("cov_" + std::to_string(k) + ".gcda");
            if (!fs::is_regular_file(gcda)) continue; // nothing flushed
            fs::path report = workdir / "__gcov_out.txt";
            std::vector<std::string> argv = {tc.gcov, "-t", gcda.filename().string()};
            auto res = run_process(argv, workdir, std::nullopt, report, log_path, compile_limits);
            if (!res.normal_exit() || res.exit_code != 0) {
                throw EnvironmentError("gcov failed: " + detail::read_capped(log_path));
            }
            for (const auto& [path, lines] : detail::parse_gcov_text(detail::read_capped(report))) {
                for (int local : lines) {
                    auto it = flat.to_global.find({path, local});
                    if (it != flat.to_global.end()) row.covered.insert(it->second);
                }
            }
        }
        matrix.tests.push_back(std::move(row));
    }
    return matrix;
}

} // namespace flame
