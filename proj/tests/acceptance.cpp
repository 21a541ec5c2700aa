// Acceptance suite: one check per criterion, one pass/fail line each.
// Criterion 9 drives the CLI binary itself (path via --cli).

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flame/flame.hpp"
#include "test_support.hpp"

using namespace flame;

namespace {

const fs::path kFixtures = FLAME_TEST_FIXTURES;
fs::path g_cli_path;

struct Criterion {
    int number;
    std::string name;
    double budget_s;
    std::function<void(std::ostringstream&)> body; // throws on failure
};

int g_failures = 0;

void run_criterion(const Criterion& c) {
    std::ostringstream detail;
    auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
        c.body(detail);
    } catch (const std::exception& e) {
        error = e.what();
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                         .count();
    if (error.empty() && c.budget_s > 0 && elapsed > c.budget_s) {
        std::ostringstream budget;
        budget << "exceeded time budget (" << elapsed << " s > " << c.budget_s << " s)";
        error = budget.str();
    }
    bool pass = error.empty();
    if (!pass) ++g_failures;
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << c.number << ": " << c.name;
    std::cout << " (" << static_cast<int>(elapsed * 1000) << " ms";
    if (!detail.str().empty()) std::cout << "; " << detail.str();
    std::cout << ")";
    if (!pass) std::cout << " -- " << error;
    std::cout << "\n";
}

void require(bool cond, const std::string& message) {
    if (!cond) throw std::runtime_error(message);
}

// --------------------------------------------------------------------------
// 1. voting oracle equivalence
// --------------------------------------------------------------------------
void voting_oracle(std::ostringstream& detail) {
    std::mt19937_64 rng(101);
    const int instances = 1000;
    for (int iter = 0; iter < instances; ++iter) {
        int n = static_cast<int>(rng() % 100) + 1;
        auto annotations = testsupport::random_annotations(rng, n, 6, 10);
        auto got = run_vote(annotations, n).order;
        auto want = testsupport::vote_order_oracle(annotations, n);
        require(got == want, "order mismatch at instance " + std::to_string(iter));
    }
    detail << instances << " instances";
}

// --------------------------------------------------------------------------
// 2. weight mass conservation
// --------------------------------------------------------------------------
void mass_conservation(std::ostringstream& detail) {
    std::mt19937_64 rng(103);
    const int trials = 10000;
    std::vector<Annotation> batch;
    int non_empty = 0;
    for (int iter = 0; iter < trials; ++iter) {
        Annotation a;
        a.model = "m";
        a.round = 1;
        int n = static_cast<int>(rng() % 200) + 1;
        int size = static_cast<int>(rng() % 10) + 1;
        for (int j = 0; j < size; ++j) a.flagged.insert(static_cast<int>(rng() % n) + 1);
        double mass = 0.0;
        for (const auto& [_, w] : weights(a)) mass += w;
        require(std::abs(mass - 1.0) <= 1e-9,
                "weight mass " + std::to_string(mass) + " at " + std::to_string(iter));
        if (batch.size() < 500) {
            batch.push_back(a);
            ++non_empty;
        }
    }
    double total = 0.0;
    for (const auto& [_, s] : aggregate(batch)) total += s;
    require(std::abs(total - non_empty) <= 1e-9, "aggregate mass mismatch");
    detail << trials << " annotations";
}

// --------------------------------------------------------------------------
// 3. tie-break law
// --------------------------------------------------------------------------
void tie_break(std::ostringstream& detail) {
    std::mt19937_64 rng(107);
    const int trials = 300;
    for (int iter = 0; iter < trials; ++iter) {
        int n = static_cast<int>(rng() % 60) + 5;
        int groups = static_cast<int>(rng() % 4) + 1;
        std::map<int, double> scores;
        std::map<int, std::vector<int>> lines_of_group;
        for (int line = 1; line <= n; ++line) {
            int g = static_cast<int>(rng() % (groups + 1)); // group 0 = score zero
            if (g > 0) {
                scores[line] = static_cast<double>(g); // planted equal scores
                lines_of_group[g].push_back(line);
            }
        }
        auto order = rank(scores, n);
        std::map<int, int> position;
        for (int i = 0; i < n; ++i) position[order[static_cast<std::size_t>(i)]] = i;
        for (const auto& [g, lines] : lines_of_group) {
            for (std::size_t i = 1; i < lines.size(); ++i) {
                require(position[lines[i - 1]] < position[lines[i]],
                        "equal-score subset not in ascending line order");
            }
        }
    }
    for (int n : {1, 5, 40}) {
        std::vector<int> identity(static_cast<std::size_t>(n));
        std::iota(identity.begin(), identity.end(), 1);
        require(rank({}, n) == identity, "all-zero scores must give the identity");
    }
    detail << trials << " score maps";
}

// --------------------------------------------------------------------------
// 4. alignment recovery
// --------------------------------------------------------------------------
void alignment_recovery(std::ostringstream& detail) {
    std::mt19937_64 rng(109);
    const int programs = 200;
    int total_markers = 0, recovered = 0;

    for (int iter = 0; iter < programs; ++iter) {
        int n = 30 + static_cast<int>(rng() % 271); // 30..300
        std::vector<std::string> lines;
        for (int i = 0; i < n; ++i) {
            lines.push_back("    int value_" + std::to_string(iter) + "_" + std::to_string(i) +
                            " = compute_" + std::to_string(i) + "(input, " +
                            std::to_string(rng() % 97) + ");");
        }
        FlatProgram original = flatten(testsupport::single_file(join_lines(lines) + "\n"));

        int marker_count = 1 + static_cast<int>(rng() % 4);
        std::set<int> marked;
        while (static_cast<int>(marked.size()) < marker_count) {
            marked.insert(static_cast<int>(rng() % n) + 1);
        }

        // identity perturbation first: every marker must map to itself
        {
            std::vector<std::string> annotated = lines;
            for (int line : marked) {
                annotated[static_cast<std::size_t>(line - 1)] += " // @@ suspicious";
            }
            auto mapping = align(annotated, original);
            for (int line : marked) {
                bool ok = false;
                for (const auto& [ai, g] : mapping) {
                    if (ai == line) ok = g == line;
                }
                require(ok, "identity perturbation must recover every marker");
            }
        }

        // perturbed copy: <=3 blank lines, re-indentation, <=2 comment lines
        std::vector<std::string> annotated = lines;
        std::map<int, int> true_line_of_index; // current index -> original line
        for (int i = 1; i <= n; ++i) true_line_of_index[i] = i;
        auto insert_at = [&](int pos_1based, const std::string& text) {
            annotated.insert(annotated.begin() + (pos_1based - 1), text);
            std::map<int, int> shifted;
            for (const auto& [idx, line] : true_line_of_index) {
                shifted[idx >= pos_1based ? idx + 1 : idx] = line;
            }
            true_line_of_index = std::move(shifted);
        };
        int blanks = static_cast<int>(rng() % 4);
        for (int b = 0; b < blanks; ++b) {
            insert_at(static_cast<int>(rng() % annotated.size()) + 1, "");
        }
        int comments = static_cast<int>(rng() % 3);
        for (int cmt = 0; cmt < comments; ++cmt) {
            insert_at(static_cast<int>(rng() % annotated.size()) + 1,
                      "// reviewer note " + std::to_string(rng() % 1000));
        }
        for (auto& [idx, line] : true_line_of_index) {
            if (rng() % 3 == 0) {
                annotated[static_cast<std::size_t>(idx - 1)] =
                    std::string(rng() % 8, ' ') + lstrip(annotated[static_cast<std::size_t>(idx - 1)]);
            }
        }
        std::map<int, int> marker_index; // annotated index -> true original line
        for (const auto& [idx, line] : true_line_of_index) {
            if (marked.count(line)) {
                annotated[static_cast<std::size_t>(idx - 1)] += " // @@ suspicious";
                marker_index[idx] = line;
            }
        }

        auto mapping = align(annotated, original);
        for (const auto& [idx, g] : mapping) {
            require(line_similarity(annotated[static_cast<std::size_t>(idx - 1)],
                                    original.lines[static_cast<std::size_t>(g - 1)]) > 0.9,
                    "accepted mapping below similarity threshold");
        }
        for (const auto& [idx, true_line] : marker_index) {
            ++total_markers;
            auto it = mapping.find(idx);
            if (it != mapping.end() && it->second == true_line) ++recovered;
        }
    }
    double rate = static_cast<double>(recovered) / total_markers;
    detail << "recovered " << recovered << "/" << total_markers << " = " << rate * 100.0 << "%";
    require(rate >= 0.95, "recovery below 95%");
}

// --------------------------------------------------------------------------
// 5. flatten bijection
// --------------------------------------------------------------------------
void flatten_bijection(std::ostringstream& detail) {
    std::mt19937_64 rng(113);
    const int trees = 100;
    int checked = 0;
    for (int iter = 0; iter < trees; ++iter) {
        Submission sub;
        sub.language = Language::CPP;
        int files = 1 + static_cast<int>(rng() % 10);
        for (int f = 0; f < files; ++f) {
            std::string content;
            int lines = static_cast<int>(rng() % 201);
            for (int l = 0; l < lines; ++l) {
                content += "token_" + std::to_string(rng() % 1000) + ";\n";
            }
            std::string dir = rng() % 2 ? "src/" : "";
            sub.files.push_back({dir + "file_" + std::to_string(f) + ".cpp", content});
        }
        std::sort(sub.files.begin(), sub.files.end(),
                  [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
        FlatProgram fp = flatten(sub);
        for (int g = 1; g <= fp.size(); ++g) {
            if (fp.is_header(g)) continue;
            SourceLoc loc = unflatten_line(fp, g);
            require(fp.to_global.at({loc.path, loc.line}) == g, "round trip broke");
            ++checked;
        }
    }
    detail << trees << " trees, " << checked << " lines";
}

// --------------------------------------------------------------------------
// 6. ochiai closed form
// --------------------------------------------------------------------------
void ochiai_closed_form(std::ostringstream& detail) {
    int cases = 0;
    for (int ef = 0; ef <= 5; ++ef) {
        for (int ep = 0; ep <= 5; ++ep) {
            for (int nf = 0; nf <= 5; ++nf) {
                for (int np = 0; np <= 5; ++np) {
                    double got = ochiai({ef, ep, nf, np});
                    double denom = std::sqrt(static_cast<double>(ef + nf) *
                                             static_cast<double>(ef + ep));
                    double want = (ef == 0 || denom == 0.0) ? 0.0 : ef / denom;
                    require(std::abs(got - want) <= 1e-12, "closed-form mismatch");
                    ++cases;
                }
            }
        }
    }
    detail << cases << " count tuples";
}

// --------------------------------------------------------------------------
// 7. ground-truth diff oracle
// --------------------------------------------------------------------------
void ground_truth_oracle_agreement(std::ostringstream& detail) {
    std::mt19937_64 rng(127);
    const int pairs = 500;
    for (int iter = 0; iter < pairs; ++iter) {
        int n = 1 + static_cast<int>(rng() % 60);
        std::vector<std::string> faulty;
        for (int i = 0; i < n; ++i) faulty.push_back("w" + std::to_string(rng() % 6));
        std::vector<std::string> fixed = faulty;
        int edits = 1 + static_cast<int>(rng() % 8);
        for (int e = 0; e < edits && !fixed.empty(); ++e) {
            int pos = static_cast<int>(rng() % fixed.size());
            switch (rng() % 3) {
                case 0: fixed[static_cast<std::size_t>(pos)] = "w" + std::to_string(rng() % 6); break;
                case 1: fixed.erase(fixed.begin() + pos); break;
                default: fixed.insert(fixed.begin() + pos, "w" + std::to_string(rng() % 6)); break;
            }
        }
        auto got_pairs = ground_truth_lines(testsupport::single_file(join_lines(faulty) + "\n"),
                                            testsupport::single_file(join_lines(fixed) + "\n"))
                             .faulty_lines;
        std::set<int> got;
        for (const auto& [_, line] : got_pairs) got.insert(line);
        auto want = testsupport::ground_truth_oracle(faulty, fixed);
        require(got == want, "diff oracle disagreement at pair " + std::to_string(iter));
    }
    detail << pairs << " pairs";
}

// --------------------------------------------------------------------------
// 8. top-k monotonicity
// --------------------------------------------------------------------------
void topk_monotonicity(std::ostringstream& detail) {
    std::mt19937_64 rng(131);
    const int trials = 400;
    std::vector<EvalRecord> records;
    for (int iter = 0; iter < trials; ++iter) {
        int n = 1 + static_cast<int>(rng() % 40);
        EvalRecord r;
        r.program_id = "p" + std::to_string(iter);
        r.ranking.n = n;
        r.ranking.order.resize(static_cast<std::size_t>(n));
        std::iota(r.ranking.order.begin(), r.ranking.order.end(), 1);
        std::shuffle(r.ranking.order.begin(), r.ranking.order.end(), rng);
        int truth_size = 1 + static_cast<int>(rng() % n);
        for (int t = 0; t < truth_size; ++t) r.truth.insert(1 + static_cast<int>(rng() % n));
        bool prev = false;
        for (int k = 1; k <= n + 3; ++k) {
            bool hit = topk_hit(r, k);
            require(!prev || hit, "topk_hit not monotone in k");
            prev = hit;
        }
        records.push_back(std::move(r));
    }
    TopKTable table = evaluate(records, {1, 2, 3, 5, 8, 13, 21});
    int prev = -1;
    for (int k : table.ks) {
        require(table.counts.at(k) >= prev, "table counts decreased in k");
        prev = table.counts.at(k);
    }
    detail << trials << " rankings";
}

// --------------------------------------------------------------------------
// 9. deterministic end-to-end against committed goldens
// --------------------------------------------------------------------------
void run_cli(const std::vector<std::string>& args, const fs::path& log) {
    std::vector<std::string> argv = {g_cli_path.string()};
    argv.insert(argv.end(), args.begin(), args.end());
    ProcessLimits limits;
    limits.wall_time_ms = 60'000;
    auto res = run_process(argv, fs::current_path(), std::nullopt, log, log, limits);
    if (!res.normal_exit() || res.exit_code != 0) {
        throw std::runtime_error("CLI failed (exit " + std::to_string(res.exit_code) + "): " +
                                 read_file(log));
    }
}

void compare_golden(const fs::path& got_path, const fs::path& golden_path) {
    std::string got = read_file(got_path);
    std::string want = read_file(golden_path);
    if (got != want) {
        std::size_t at = 0;
        while (at < std::min(got.size(), want.size()) && got[at] == want[at]) ++at;
        throw std::runtime_error(got_path.filename().string() +
                                 " differs from golden at byte " + std::to_string(at));
    }
}

void deterministic_end_to_end(std::ostringstream& detail) {
    require(!g_cli_path.empty() && fs::exists(g_cli_path),
            "CLI binary not found; pass --cli <path>");
    fs::path e2e = kFixtures / "e2e";
    fs::path problem = kFixtures / "problems" / "sumab";

    ScopedTempDir out1("flame-acc-loc-");
    run_cli({"--config", (e2e / "config.toml").string(), "--mock-dir", (e2e / "mock").string(),
             "--out", out1.path().string(), "localize", problem.string(),
             (problem / "pairs" / "s1" / "faulty").string()},
            out1.path() / "cli.log");
    compare_golden(out1.path() / "report.json", e2e / "golden" / "report.json");
    compare_golden(out1.path() / "annotated.txt", e2e / "golden" / "annotated.txt");

    ScopedTempDir out2("flame-acc-eval-");
    run_cli({"--config", (e2e / "config.toml").string(), "--mock-dir", (e2e / "mock").string(),
             "--out", out2.path().string(), "eval", "--manifest",
             (e2e / "manifest.json").string(), "--ks", "1,3,5,10"},
            out2.path() / "cli.log");
    compare_golden(out2.path() / "eval.json", e2e / "golden" / "eval.json");
    compare_golden(out2.path() / "eval.txt", e2e / "golden" / "eval.txt");

    detail << "report, annotated source, eval table byte-identical";
}

// --------------------------------------------------------------------------
// 10. judge verdicts
// --------------------------------------------------------------------------
void judge_verdicts(std::ostringstream& detail) {
    Problem prob;
    prob.id = "acc-judge";
    prob.time_limit_ms = 1000;
    prob.memory_limit_mb = 256;
    prob.tests = {{"1", "3 4\n", "7\n"}};

    auto verdict_of = [&](const char* source) {
        ScopedTempDir work("flame-acc-judge-");
        JudgeResult r = judge_all(testsupport::single_file(source), prob, work.path());
        require(r.compiled(), "toy program failed to compile");
        require(r.outcomes.size() == 1, "expected one outcome");
        return r.outcomes[0];
    };

    auto ac = verdict_of(R"(#include <stdio.h>
int main(void){int a,b;scanf("%d %d",&a,&b);printf("%d\n",a+b);return 0;})");
    require(ac.verdict == Verdict::AC, "expected AC");

    auto wa = verdict_of(R"(#include <stdio.h>
int main(void){int a,b;scanf("%d %d",&a,&b);printf("%d\n",a*b);return 0;})");
    require(wa.verdict == Verdict::WA, "expected WA");

    auto re = verdict_of("int main(void){int* p = 0; return *p;}");
    require(re.verdict == Verdict::RE, "expected RE");

    auto tle = verdict_of("int main(void){for(;;){}return 0;}");
    require(tle.verdict == Verdict::TLE, "expected TLE");
    require(tle.wall_time_ms >= 1000, "TLE ended before the limit");
    require(tle.wall_time_ms <= 1500, "TLE exceeded limit + 500 ms slack");

    detail << "AC, WA, RE, TLE; TLE wall " << tle.wall_time_ms << " ms";
}

// --------------------------------------------------------------------------
// 11. repair metrics truth table
// --------------------------------------------------------------------------
void repair_truth_table(std::ostringstream& detail) {
    auto outcome = [](bool compiled, int before, int after, int total) {
        RepairOutcome o;
        o.compiled = compiled;
        o.before_pass = before;
        o.after_pass = after;
        o.total_tests = total;
        return o;
    };
    struct Case {
        RepairOutcome o;
        bool fixed;
        bool improved;
    };
    std::vector<Case> cases = {
        {outcome(true, 3, 10, 10), true, true},   // passes all tests
        {outcome(true, 3, 5, 10), false, true},   // passes more tests
        {outcome(true, 3, 3, 10), false, false},  // after == before
        {outcome(true, 5, 3, 10), false, false},  // regression
        {outcome(true, 10, 10, 10), true, false}, // already passing, unchanged
        {outcome(true, 0, 10, 10), true, true},   // full rescue
        {outcome(false, 3, 10, 10), false, false},// non-compiling never counts
        {outcome(false, 0, 0, 10), false, false},
        {outcome(true, 0, 0, 0), true, false},    // zero-test boundary
    };
    for (std::size_t i = 0; i < cases.size(); ++i) {
        require(is_fixed(cases[i].o) == cases[i].fixed,
                "is_fixed mismatch in case " + std::to_string(i));
        require(is_improved(cases[i].o) == cases[i].improved,
                "is_improved mismatch in case " + std::to_string(i));
        if (cases[i].o.before_pass < cases[i].o.total_tests && is_fixed(cases[i].o)) {
            require(is_improved(cases[i].o), "fixed must imply improved when not yet passing");
        }
    }
    detail << cases.size() << " boundary cases";
}

} // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--cli") g_cli_path = argv[i + 1];
    }

    std::vector<Criterion> criteria = {
        {1, "voting oracle equivalence", 5.0, voting_oracle},
        {2, "weight mass conservation", 5.0, mass_conservation},
        {3, "tie-break law", 5.0, tie_break},
        {4, "alignment recovery", 10.0, alignment_recovery},
        {5, "flatten bijection", 5.0, flatten_bijection},
        {6, "ochiai closed form", 5.0, ochiai_closed_form},
        {7, "ground-truth diff oracle", 5.0, ground_truth_oracle_agreement},
        {8, "top-k monotonicity", 5.0, topk_monotonicity},
        {9, "deterministic end-to-end", 5.0, deterministic_end_to_end},
        {10, "judge verdicts", 20.0, judge_verdicts},
        {11, "repair metrics truth table", 5.0, repair_truth_table},
    };
    for (const auto& c : criteria) run_criterion(c);

    if (g_failures > 0) {
        std::cout << g_failures << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all " << criteria.size() << " criteria passed\n";
    return 0;
}
