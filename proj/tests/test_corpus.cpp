#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "flame/corpus.hpp"
#include "test_support.hpp"

using namespace flame;
using testsupport::single_file;

TEST_CASE("load_problem reads the fixture layout", "[corpus]") {
    Problem prob = load_problem(testsupport::fixtures_dir() / "problems" / "sumab");
    CHECK(prob.id == "sumab");
    CHECK(prob.time_limit_ms == 2000);
    CHECK(prob.memory_limit_mb == 256);
    REQUIRE(prob.tests.size() == 3);
    CHECK(prob.tests[0].id == "1");
    CHECK(prob.tests[1].id == "2");
    CHECK(prob.tests[2].id == "3");
    CHECK(prob.tests[0].input == "3\n1 2 3\n");
    CHECK(prob.tests[0].expected_output == "6\n");
    CHECK(prob.description.find("print their sum") != std::string::npos);
    CHECK(prob.input_spec.find("first line") != std::string::npos);
    REQUIRE(prob.samples.size() == 2);
    CHECK(prob.samples[0].input == "3\n1 2 3");
    CHECK(prob.samples[0].expected_output == "6");
    REQUIRE(prob.samples[0].note.has_value());
    CHECK(!prob.samples[1].note.has_value());
}

TEST_CASE("load_problem rejects broken layouts", "[corpus]") {
    ScopedTempDir tmp;
    CHECK_THROWS_AS(load_problem(tmp.path() / "nope"), DatasetError);

    write_file(tmp.path() / "statement.md", "# Description\nx\n");
    write_file(tmp.path() / "limits.json", R"({"time_limit_ms": 1000, "memory_limit_mb": 64})");
    SECTION("missing tests directory") {
        CHECK_THROWS_AS(load_problem(tmp.path()), DatasetError);
    }
    SECTION("empty tests directory") {
        fs::create_directories(tmp.path() / "tests");
        CHECK_THROWS_AS(load_problem(tmp.path()), DatasetError);
    }
    SECTION("zero time limit") {
        fs::create_directories(tmp.path() / "tests");
        write_file(tmp.path() / "tests" / "1.in", "1\n");
        write_file(tmp.path() / "tests" / "1.out", "1\n");
        write_file(tmp.path() / "limits.json",
                   R"({"time_limit_ms": 0, "memory_limit_mb": 64})");
        CHECK_THROWS_WITH(load_problem(tmp.path()), Catch::Matchers::ContainsSubstring("invalid limit"));
    }
    SECTION("malformed limits json") {
        fs::create_directories(tmp.path() / "tests");
        write_file(tmp.path() / "tests" / "1.in", "1\n");
        write_file(tmp.path() / "tests" / "1.out", "1\n");
        write_file(tmp.path() / "limits.json", "not json");
        CHECK_THROWS_AS(load_problem(tmp.path()), DatasetError);
    }
}

TEST_CASE("load_submission orders files lexicographically", "[corpus]") {
    ScopedTempDir tmp;
    write_file(tmp.path() / "b.cpp", "int b;\n");
    write_file(tmp.path() / "a.cpp", "int a;\n");
    Submission sub = load_submission(tmp.path(), Language::CPP);
    REQUIRE(sub.files.size() == 2);
    CHECK(sub.files[0].path == "a.cpp");
    CHECK(sub.files[1].path == "b.cpp");
}

TEST_CASE("load_submission rejects empty directories", "[corpus]") {
    ScopedTempDir tmp;
    CHECK_THROWS_AS(load_submission(tmp.path(), Language::C), DatasetError);
    write_file(tmp.path() / "notes.txt", "not source\n");
    CHECK_THROWS_AS(load_submission(tmp.path(), Language::C), DatasetError);
}

TEST_CASE("load_submission normalizes line endings", "[corpus]") {
    ScopedTempDir tmp;
    write_file(tmp.path() / "main.c", "int a;\r\nint b;\r\n");
    Submission sub = load_submission(tmp.path(), Language::C);
    CHECK(sub.files[0].content == "int a;\nint b;\n");
}

TEST_CASE("flatten keeps single files identity-mapped", "[corpus]") {
    FlatProgram fp = flatten(single_file("a\nb\nc\n"));
    REQUIRE(fp.size() == 3);
    CHECK(fp.lines == std::vector<std::string>{"a", "b", "c"});
    for (int g = 1; g <= 3; ++g) {
        CHECK_FALSE(fp.is_header(g));
        SourceLoc loc = unflatten_line(fp, g);
        CHECK(loc.path == "main.c");
        CHECK(loc.line == g);
    }
}

TEST_CASE("flatten interleaves header lines for multi-file projects", "[corpus]") {
    Submission sub;
    sub.language = Language::C;
    sub.files.push_back({"a.c", "x\ny\n"});
    sub.files.push_back({"b.c", "z\nw\n"});
    FlatProgram fp = flatten(sub);

    // hand-enumerated: header, a1, a2, header, b1, b2
    REQUIRE(fp.size() == 6);
    CHECK(fp.lines[0] == "==== FILE: a.c ====");
    CHECK(fp.lines[3] == "==== FILE: b.c ====");
    CHECK(fp.is_header(1));
    CHECK(fp.is_header(4));
    SourceLoc loc = unflatten_line(fp, 2);
    CHECK(loc.path == "a.c");
    CHECK(loc.line == 1);
    CHECK(unflatten_line(fp, 6).path == "b.c");
    CHECK(unflatten_line(fp, 6).line == 2);
}

TEST_CASE("flatten places consecutive headers around empty files", "[corpus]") {
    Submission sub;
    sub.language = Language::C;
    sub.files.push_back({"a.c", ""});
    sub.files.push_back({"b.c", "x\n"});
    FlatProgram fp = flatten(sub);
    REQUIRE(fp.size() == 3);
    CHECK(fp.is_header(1));
    CHECK(fp.is_header(2));
    CHECK(fp.lines[2] == "x");
}

TEST_CASE("unflatten_line rejects headers and out-of-range lines", "[corpus]") {
    Submission sub;
    sub.language = Language::C;
    sub.files.push_back({"a.c", "x\n"});
    sub.files.push_back({"b.c", "y\n"});
    FlatProgram fp = flatten(sub);
    CHECK_THROWS_AS(unflatten_line(fp, 1), Error);
    CHECK_THROWS_AS(unflatten_line(fp, 0), Error);
    CHECK_THROWS_AS(unflatten_line(fp, 5), Error);
}

TEST_CASE("flatten round trip holds on random multi-file trees", "[corpus][property]") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> file_count(1, 10);
    std::uniform_int_distribution<int> line_count(0, 30);
    for (int iter = 0; iter < 50; ++iter) {
        Submission sub;
        sub.language = Language::C;
        int files = file_count(rng);
        for (int f = 0; f < files; ++f) {
            std::string content;
            int lines = line_count(rng);
            for (int l = 0; l < lines; ++l) {
                content += "line_" + std::to_string(f) + "_" + std::to_string(l) + "\n";
            }
            sub.files.push_back({"f" + std::to_string(f) + ".c", content});
        }
        FlatProgram fp = flatten(sub);
        for (int g = 1; g <= fp.size(); ++g) {
            if (fp.is_header(g)) continue;
            SourceLoc loc = unflatten_line(fp, g);
            CHECK(fp.to_global.at({loc.path, loc.line}) == g);
        }
    }
}

TEST_CASE("ground_truth_lines flags modified and deleted lines", "[corpus]") {
    auto gt = [](const std::string& faulty, const std::string& fixed) {
        return ground_truth_lines(single_file(faulty), single_file(fixed)).faulty_lines;
    };
    using Lines = std::set<std::pair<std::string, int>>;
    CHECK(gt("a\nb\nc", "a\nB\nc") == Lines{{"main.c", 2}});
    CHECK(gt("a\nx\nb", "a\nb") == Lines{{"main.c", 2}});
}

TEST_CASE("ground_truth_lines attributes pure insertions to the following line", "[corpus]") {
    using Lines = std::set<std::pair<std::string, int>>;
    auto gt = [](const std::string& faulty, const std::string& fixed) {
        return ground_truth_lines(single_file(faulty), single_file(fixed)).faulty_lines;
    };
    // oracle: canonical LCS matches a<->a and c<->c, insertion before faulty line 2
    CHECK(gt("a\nc", "a\nb\nc") == Lines{{"main.c", 2}});
    CHECK(testsupport::ground_truth_oracle({"a", "c"}, {"a", "b", "c"}) == std::set<int>{2});
    // insertion at end of file marks the last line
    CHECK(gt("a\nb", "a\nb\nc") == Lines{{"main.c", 2}});
}

TEST_CASE("ground_truth_lines ignores trailing whitespace", "[corpus]") {
    CHECK(ground_truth_lines(single_file("a  \nb\n"), single_file("a\nb\t\n"))
              .faulty_lines.empty());
}

TEST_CASE("ground_truth_lines rejects creation/deletion pairs", "[corpus]") {
    Submission faulty = single_file("a\n");
    Submission fixed;
    fixed.language = Language::C;
    fixed.files.push_back({"main.c", "a\n"});
    fixed.files.push_back({"extra.c", "b\n"});
    CHECK_THROWS_WITH(ground_truth_lines(faulty, fixed),
                      Catch::Matchers::ContainsSubstring("file creation/deletion"));
}

TEST_CASE("ground truth of identical submissions is empty", "[corpus][property]") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> line_count(0, 40);
    std::uniform_int_distribution<int> word(0, 5);
    for (int iter = 0; iter < 30; ++iter) {
        std::string content;
        int lines = line_count(rng);
        for (int l = 0; l < lines; ++l) content += "w" + std::to_string(word(rng)) + "\n";
        Submission sub = single_file(content);
        CHECK(ground_truth_lines(sub, sub).faulty_lines.empty());
    }
}

TEST_CASE("ground truth agrees with the independent diff oracle", "[corpus][property]") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> line_count(1, 40);
    std::uniform_int_distribution<int> word(0, 5); // small alphabet forces repeats
    std::uniform_int_distribution<int> edit_count(1, 6);
    std::uniform_int_distribution<int> edit_kind(0, 2);

    for (int iter = 0; iter < 200; ++iter) {
        int n = line_count(rng);
        std::vector<std::string> faulty;
        for (int i = 0; i < n; ++i) faulty.push_back("w" + std::to_string(word(rng)));

        std::vector<std::string> fixed = faulty;
        int edits = edit_count(rng);
        for (int e = 0; e < edits && !fixed.empty(); ++e) {
            std::uniform_int_distribution<int> pos_dist(0, static_cast<int>(fixed.size()) - 1);
            int pos = pos_dist(rng);
            switch (edit_kind(rng)) {
                case 0: fixed[static_cast<std::size_t>(pos)] = "w" + std::to_string(word(rng)); break;
                case 1: fixed.erase(fixed.begin() + pos); break;
                default:
                    fixed.insert(fixed.begin() + pos, "w" + std::to_string(word(rng)));
                    break;
            }
        }

        Submission fa = single_file(join_lines(faulty) + "\n");
        Submission fb = single_file(join_lines(fixed) + "\n");
        auto got = ground_truth_lines(fa, fb).faulty_lines;
        std::set<int> got_lines;
        for (const auto& [path, line] : got) {
            CHECK(path == "main.c");
            CHECK(line >= 1);
            CHECK(line <= n);
            got_lines.insert(line);
        }
        CHECK(got_lines == testsupport::ground_truth_oracle(faulty, fixed));
        if (faulty != fixed) CHECK_FALSE(got_lines.empty());
    }
}

TEST_CASE("load_history_pool returns submissions in directory order", "[corpus]") {
    auto pool = load_history_pool(testsupport::fixtures_dir() / "problems" / "sumab",
                                  Language::C);
    REQUIRE(pool.size() == 2);
    CHECK(pool[0].files[0].content.find("while (count--") != std::string::npos);
    CHECK(pool[1].files[0].content.find("for (int i = 0") != std::string::npos);

    ScopedTempDir tmp;
    write_file(tmp.path() / "statement.md", "# Description\nx\n");
    CHECK(load_history_pool(tmp.path(), Language::C).empty());
}
