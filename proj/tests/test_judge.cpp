#include <catch2/catch_amalgamated.hpp>

#include "flame/judge.hpp"
#include "test_support.hpp"

using namespace flame;
using testsupport::single_file;

namespace {

const char* kEchoSum = R"(#include <stdio.h>
int main(void) {
    int a, b;
    if (scanf("%d %d", &a, &b) != 2) return 1;
    printf("%d\n", a + b);
    return 0;
})";

Problem tiny_problem(std::vector<Test> tests, int time_ms = 2000, int mem_mb = 256) {
    Problem prob;
    prob.id = "tiny";
    prob.tests = std::move(tests);
    prob.time_limit_ms = time_ms;
    prob.memory_limit_mb = mem_mb;
    return prob;
}

} // namespace

TEST_CASE("compare_output follows OJ whitespace conventions", "[judge]") {
    CHECK(compare_output("1 2\n", "1 2"));
    CHECK(compare_output("1 \n2", "1\n2"));
    CHECK_FALSE(compare_output("1\n2", "1 2"));
    CHECK(compare_output("a\n\n\n", "a"));
    CHECK(compare_output("", "\n"));
}

TEST_CASE("compile succeeds on valid C and reports artifacts", "[judge]") {
    ScopedTempDir tmp;
    CompileResult cr = compile(single_file(kEchoSum), tmp.path());
    CHECK(cr.success);
    REQUIRE(cr.artifact_path.has_value());
    CHECK(fs::exists(*cr.artifact_path));
}

TEST_CASE("compile captures diagnostics on failure", "[judge]") {
    ScopedTempDir tmp;
    CompileResult cr = compile(single_file("int main(void) { return 0 }\n"), tmp.path());
    CHECK_FALSE(cr.success);
    CHECK(cr.diagnostics.find("error") != std::string::npos);
    CHECK_FALSE(cr.artifact_path.has_value());
}

TEST_CASE("missing toolchain is an environment error, not CE", "[judge]") {
    ScopedTempDir tmp;
    ToolchainConfig tc;
    tc.c_compile = "no-such-compiler-zz -o {output} {sources}";
    CHECK_THROWS_AS(compile(single_file(kEchoSum), tmp.path(), tc), EnvironmentError);
}

TEST_CASE("run_test issues AC, WA, RE, TLE and MLE verdicts", "[judge]") {
    ScopedTempDir tmp;
    Limits limits{1000, 64};

    SECTION("AC and WA") {
        CompileResult cr = compile(single_file(kEchoSum), tmp.path());
        REQUIRE(cr.success);
        Artifact art = make_artifact(cr, Language::C);
        TestOutcome ok = run_test(art, Test{"1", "2 3\n", "5\n"}, limits);
        CHECK(ok.verdict == Verdict::AC);
        REQUIRE(ok.actual_output.has_value());

        TestOutcome wrong = run_test(art, Test{"2", "2 3\n", "6\n"}, limits);
        CHECK(wrong.verdict == Verdict::WA);
        REQUIRE(wrong.actual_output.has_value());
        CHECK(compare_output(*wrong.actual_output, "5\n"));
    }

    SECTION("RE on nonzero exit") {
        CompileResult cr = compile(single_file("int main(void){ return 3; }\n"), tmp.path());
        REQUIRE(cr.success);
        TestOutcome out = run_test(make_artifact(cr, Language::C), Test{"1", "", "x"}, limits);
        CHECK(out.verdict == Verdict::RE);
        CHECK_FALSE(out.actual_output.has_value());
    }

    SECTION("RE on crash") {
        CompileResult cr =
            compile(single_file("int main(void){ int* p = 0; return *p; }\n"), tmp.path());
        REQUIRE(cr.success);
        TestOutcome out = run_test(make_artifact(cr, Language::C), Test{"1", "", "x"}, limits);
        CHECK(out.verdict == Verdict::RE);
    }

    SECTION("TLE kills promptly") {
        CompileResult cr =
            compile(single_file("int main(void){ for(;;){} return 0; }\n"), tmp.path());
        REQUIRE(cr.success);
        TestOutcome out = run_test(make_artifact(cr, Language::C), Test{"1", "", "x"}, limits);
        CHECK(out.verdict == Verdict::TLE);
        CHECK(out.wall_time_ms >= 1000);
        CHECK(out.wall_time_ms < 1500);
        CHECK_FALSE(out.actual_output.has_value());
    }

    SECTION("MLE when touched memory exceeds the limit") {
        // volatile stores + printed checksum so the faulted pages survive -O2
        const char* hog = R"(#include <stdio.h>
#include <stdlib.h>
int main(void) {
    size_t total = 150u * 1024 * 1024;
    volatile char* p = malloc(total);
    if (!p) return 0;
    unsigned long sum = 0;
    for (size_t i = 0; i < total; i += 1024) {
        p[i] = (char)(i & 0xff);
        sum += (unsigned char)p[i];
    }
    printf("%lu\n", sum);
    return 0;
})";
        CompileResult cr = compile(single_file(hog), tmp.path());
        REQUIRE(cr.success);
        TestOutcome out = run_test(make_artifact(cr, Language::C), Test{"1", "", ""}, limits);
        CHECK(out.verdict == Verdict::MLE);
        REQUIRE(out.peak_memory_mb.has_value());
        CHECK(*out.peak_memory_mb > 64);
    }
}

TEST_CASE("judge_all runs every test in id order", "[judge]") {
    // wrong only when the input is 42
    const char* flaky = R"(#include <stdio.h>
int main(void) {
    int x;
    if (scanf("%d", &x) != 1) return 1;
    printf("%d\n", x == 42 ? 0 : x);
    return 0;
})";
    Problem prob = tiny_problem({{"1", "1\n", "1\n"}, {"2", "42\n", "42\n"}, {"3", "3\n", "3\n"}});
    ScopedTempDir tmp;
    JudgeResult result = judge_all(single_file(flaky), prob, tmp.path());
    REQUIRE(result.compiled());
    REQUIRE(result.outcomes.size() == 3);
    CHECK(result.outcomes[0].verdict == Verdict::AC);
    CHECK(result.outcomes[1].verdict == Verdict::WA);
    CHECK(result.outcomes[2].verdict == Verdict::AC);
    CHECK_FALSE(result.accepted());
}

TEST_CASE("judge_all short-circuits on compile failure", "[judge]") {
    Problem prob = tiny_problem({{"1", "", ""}});
    ScopedTempDir tmp;
    JudgeResult result = judge_all(single_file("int main( {\n"), prob, tmp.path());
    CHECK_FALSE(result.compiled());
    CHECK(result.outcomes.empty());
    CHECK_FALSE(result.compile.diagnostics.empty());
}

TEST_CASE("judge_all handles multi-file C++ projects", "[judge]") {
    Submission sub;
    sub.language = Language::CPP;
    sub.files.push_back({"lib/add.cpp", "int add(int a, int b) { return a + b; }\n"});
    sub.files.push_back({"lib/add.h", "int add(int, int);\n"});
    sub.files.push_back({"main.cpp", R"(#include <cstdio>
#include "lib/add.h"
int main() {
    int a, b;
    if (std::scanf("%d %d", &a, &b) != 2) return 1;
    std::printf("%d\n", add(a, b));
    return 0;
})"});
    Problem prob = tiny_problem({{"1", "4 5\n", "9\n"}});
    ScopedTempDir tmp;
    JudgeResult result = judge_all(sub, prob, tmp.path());
    REQUIRE(result.compiled());
    REQUIRE(result.outcomes.size() == 1);
    CHECK(result.outcomes[0].verdict == Verdict::AC);
    CHECK(result.accepted());
}

TEST_CASE("judging the fixture pair gives AC on fixed and failures on faulty", "[judge]") {
    fs::path prob_dir = testsupport::fixtures_dir() / "problems" / "sumab";
    Problem prob = load_problem(prob_dir);
    Submission faulty = load_submission(prob_dir / "pairs" / "s1" / "faulty", Language::C);
    Submission fixed = load_submission(prob_dir / "pairs" / "s1" / "fixed", Language::C);

    ScopedTempDir wa, wb;
    JudgeResult rf = judge_all(faulty, prob, wa.path());
    REQUIRE(rf.outcomes.size() == 3);
    CHECK(rf.outcomes[0].verdict == Verdict::AC);
    CHECK(rf.outcomes[1].verdict == Verdict::WA);
    CHECK(rf.outcomes[2].verdict == Verdict::WA);

    JudgeResult rx = judge_all(fixed, prob, wb.path());
    CHECK(rx.accepted());
}
