#pragma once

#include <future>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flame/annotate.hpp"
#include "flame/config.hpp"
#include "flame/context.hpp"
#include "flame/corpus.hpp"
#include "flame/eval.hpp"
#include "flame/judge.hpp"
#include "flame/llm.hpp"
#include "flame/repair.hpp"
#include "flame/sbfl.hpp"
#include "flame/vote.hpp"

namespace flame {

inline LlmClient make_client(const RunConfig& cfg) {
    LlmClient::Options options;
    options.parallelism = cfg.parallelism;
    options.mock_dir = cfg.mock_dir;
    return LlmClient(options);
}

inline Embedder make_embedder(const RunConfig& cfg, const LlmClient& client) {
    if (cfg.embedding == "remote") {
        std::string name = cfg.embedding_backend.empty() ? cfg.models.front()
                                                         : cfg.embedding_backend;
        ChatBackend backend = cfg.backend_for(name);
        return [&client, backend](const std::string& text) {
            return client.embed_remote(backend, text);
        };
    }
    return [](const std::string& text) { return embed_local(text); };
}

struct LocalizationInputs {
    FlatProgram flat;
    JudgeResult judge;
    std::optional<std::size_t> reference_index;
    AuxiliaryContext ctx;
};

// Judge the submission and assemble the auxiliary context (statement,
// prioritized failing test, retrieved reference) per the config toggles.
inline LocalizationInputs prepare_localization(const Problem& prob, const Submission& sub,
                                               const RunConfig& cfg, const LlmClient& client,
                                               const std::vector<Submission>& reference_pool) {
    LocalizationInputs inputs;
    inputs.flat = flatten(sub);

    ScopedTempDir workdir("flame-judge-");
    inputs.judge = judge_all(sub, prob, workdir.path(), cfg.toolchain);

    std::optional<FlatProgram> reference;
    if (cfg.toggles.use_reference && !reference_pool.empty()) {
        inputs.reference_index =
            retrieve_reference_index(inputs.flat, reference_pool, make_embedder(cfg, client));
        if (inputs.reference_index) reference = flatten(reference_pool[*inputs.reference_index]);
    }

    inputs.ctx = build_context(prob, inputs.judge, std::move(reference), cfg.toggles,
                               static_cast<std::size_t>(cfg.truncate_bytes));
    return inputs;
}

inline AnnotateOptions annotate_options_of(const RunConfig& cfg) {
    AnnotateOptions options;
    options.collapse_threshold_lines = cfg.collapse_threshold_lines;
    options.similarity_threshold = cfg.similarity_threshold;
    options.templates = cfg.templates();
    return options;
}

struct LocalizationRun {
    FlatProgram flat;
    JudgeResult judge;
    std::optional<std::size_t> reference_index;
    std::vector<Annotation> annotations;
    SuspiciousnessRanking ranking;
};

// Full pipeline for one submission: judge, assemble context, annotate with
// every (model, round) pair, vote. Annotation calls run concurrently; the
// result order is fixed by (model index, round), not completion time.
inline LocalizationRun run_localization(const Problem& prob, const Submission& sub,
                                        const RunConfig& cfg, const LlmClient& client,
                                        const std::vector<Submission>& reference_pool = {}) {
    LocalizationInputs inputs = prepare_localization(prob, sub, cfg, client, reference_pool);
    LocalizationRun run;
    run.flat = std::move(inputs.flat);
    run.judge = std::move(inputs.judge);
    run.reference_index = inputs.reference_index;

    AnnotateOptions options = annotate_options_of(cfg);
    std::vector<std::future<Annotation>> futures;
    for (const auto& model : cfg.models) {
        ChatBackend backend = cfg.backend_for(model);
        for (int round = 1; round <= cfg.rounds; ++round) {
            futures.push_back(std::async(std::launch::async, [&, backend, round] {
                return annotate_once(client, backend, inputs.ctx, run.flat,
                                     cfg.annotation_mode, cfg.completion_params(), round,
                                     options);
            }));
        }
    }
    for (auto& f : futures) run.annotations.push_back(f.get());

    run.ranking = run_vote(run.annotations, run.flat.size(), cfg.vote_mode, cfg.models);
    return run;
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json ranking_json(const SuspiciousnessRanking& ranking,
                                   const FlatProgram& flat) {
    nlohmann::json ranked = nlohmann::json::array();
    int position = 1;
    for (int line : ranking.order) {
        double score = ranking.score_of(line);
        if (score <= 0.0) break;
        nlohmann::json item = {
            {"rank", position++},
            {"global_line", line},
            {"score", score},
        };
        SourceLoc loc = unflatten_line(flat, line);
        item["path"] = loc.path;
        item["local_line"] = loc.line;
        auto it = ranking.explanations.find(line);
        if (it != ranking.explanations.end()) {
            item["explanation"] = it->second.text;
            item["model"] = it->second.model;
        }
        ranked.push_back(std::move(item));
    }
    return ranked;
}

inline std::string annotated_text(const SuspiciousnessRanking& ranking,
                                  const FlatProgram& flat) {
    std::vector<std::string> lines = flat.lines;
    for (int g = 1; g <= flat.size(); ++g) {
        if (ranking.score_of(g) <= 0.0) continue;
        std::string& line = lines[static_cast<std::size_t>(g - 1)];
        line += " " + std::string(kMarkerToken);
        auto it = ranking.explanations.find(g);
        if (it != ranking.explanations.end()) line += " " + it->second.text;
    }
    return join_lines(lines) + "\n";
}

inline nlohmann::json config_echo(const RunConfig& cfg) {
    return {
        {"models", cfg.models},
        {"rounds", cfg.rounds},
        {"vote_mode", cfg.vote_mode == VoteMode::WEIGHTED ? "weighted" : "unweighted"},
        {"annotation_mode",
         cfg.annotation_mode == AnnotationMode::MARKER ? "marker" : "line_numbers"},
        {"toggles",
         {{"use_statement", cfg.toggles.use_statement},
          {"use_test", cfg.toggles.use_test},
          {"use_reference", cfg.toggles.use_reference}}},
    };
}

inline void write_json(const fs::path& path, const nlohmann::json& doc) {
    write_file(path, doc.dump(2) + "\n");
}

} // namespace detail

// ---------------------------------------------------------------------------
// manifests
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::string id;
    fs::path problem_dir;
    fs::path faulty_dir;
    fs::path fixed_dir;
};

inline std::vector<ManifestEntry> load_manifest(const fs::path& manifest_path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError("malformed manifest: " + std::string(e.what()));
    }
    if (!doc.contains("entries") || !doc.at("entries").is_array() ||
        doc.at("entries").empty()) {
        throw DatasetError("manifest has no entries");
    }
    fs::path base = manifest_path.parent_path();
    std::vector<ManifestEntry> entries;
    for (const auto& item : doc.at("entries")) {
        try {
            ManifestEntry e;
            e.id = item.at("id").get<std::string>();
            e.problem_dir = base / item.at("problem").get<std::string>();
            e.faulty_dir = base / item.at("faulty").get<std::string>();
            if (item.contains("fixed")) e.fixed_dir = base / item.at("fixed").get<std::string>();
            entries.push_back(std::move(e));
        } catch (const nlohmann::json::exception& e) {
            throw DatasetError("malformed manifest entry: " + std::string(e.what()));
        }
    }
    return entries;
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

inline LocalizationRun cmd_localize(const fs::path& problem_dir, const fs::path& submission_dir,
                                    const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    Problem prob = load_problem(problem_dir);
    Language lang = load_language(problem_dir);
    Submission sub = load_submission(submission_dir, lang);
    std::vector<Submission> pool =
        cfg.toggles.use_reference ? load_history_pool(problem_dir, lang) : std::vector<Submission>{};

    LlmClient client = make_client(cfg);
    LocalizationRun run = run_localization(prob, sub, cfg, client, pool);

    fs::create_directories(out_dir);
    nlohmann::json report = {
        {"problem", prob.id},
        {"n", run.flat.size()},
        {"ranked", detail::ranking_json(run.ranking, run.flat)},
        {"order", run.ranking.order},
        {"config", detail::config_echo(cfg)},
    };
    detail::write_json(out_dir / "report.json", report);
    write_file(out_dir / "annotated.txt", detail::annotated_text(run.ranking, run.flat));
    return run;
}

enum class EvalMethod { FLAME, OCHIAI };

struct EvalOutput {
    std::vector<EvalRecord> records;
    std::vector<std::string> skipped; // pairs with an empty diff
    TopKTable table;
};

namespace detail {

inline std::string format_percent(double fraction) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(1) << fraction * 100.0 << "%";
    return ss.str();
}

inline std::string topk_text_table(const std::string& method, const TopKTable& table) {
    std::vector<std::string> headers = {"Method"};
    std::vector<std::string> cells = {method};
    for (int k : table.ks) {
        headers.push_back("Top-" + std::to_string(k));
        cells.push_back(std::to_string(table.counts.at(k)) + " (" +
                        format_percent(table.accuracy.at(k)) + ")");
    }
    std::string out;
    for (std::size_t col = 0; col < headers.size(); ++col) {
        std::size_t width = std::max(headers[col].size(), cells[col].size()) + 2;
        out += headers[col] + std::string(width - headers[col].size(), ' ');
    }
    out = rstrip(out) + "\n";
    std::string row;
    for (std::size_t col = 0; col < headers.size(); ++col) {
        std::size_t width = std::max(headers[col].size(), cells[col].size()) + 2;
        row += cells[col] + std::string(width - cells[col].size(), ' ');
    }
    return out + rstrip(row) + "\n";
}

} // namespace detail

inline EvalOutput cmd_eval(const fs::path& manifest_path, EvalMethod method,
                           const std::vector<int>& ks, const RunConfig& cfg,
                           const fs::path& out_dir) {
    cfg.validate();
    auto entries = load_manifest(manifest_path);
    LlmClient client = make_client(cfg);

    EvalOutput output;
    for (const auto& entry : entries) {
        Problem prob = load_problem(entry.problem_dir);
        Language lang = load_language(entry.problem_dir);
        Submission faulty = load_submission(entry.faulty_dir, lang);
        if (entry.fixed_dir.empty()) throw DatasetError("manifest entry lacks 'fixed': " + entry.id);
        Submission fixed = load_submission(entry.fixed_dir, lang);

        FlatProgram flat = flatten(faulty);
        GroundTruth gt = ground_truth_lines(faulty, fixed);
        std::set<int> truth;
        for (const auto& [path, local] : gt.faulty_lines) {
            auto it = flat.to_global.find({path, local});
            if (it != flat.to_global.end()) truth.insert(it->second);
        }
        if (truth.empty()) {
            output.skipped.push_back(entry.id); // no diff, top-k undefined
            continue;
        }

        EvalRecord record;
        record.program_id = entry.id;
        record.truth = truth;
        if (method == EvalMethod::FLAME) {
            std::vector<Submission> pool =
                cfg.toggles.use_reference ? load_history_pool(entry.problem_dir, lang)
                                          : std::vector<Submission>{};
            record.ranking = run_localization(prob, faulty, cfg, client, pool).ranking;
        } else {
            ScopedTempDir workdir("flame-cov-");
            record.ranking =
                rank_from_coverage(collect_coverage(faulty, prob, workdir.path(), cfg.toolchain));
        }
        output.records.push_back(std::move(record));
    }

    if (output.records.empty()) throw DatasetError("no evaluable pairs in manifest");
    output.table = evaluate(output.records, ks);

    const std::string method_name = method == EvalMethod::FLAME ? "flame" : "ochiai";
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : output.records) {
        int first_hit = 0;
        for (std::size_t i = 0; i < r.ranking.order.size(); ++i) {
            if (r.truth.count(r.ranking.order[i])) {
                first_hit = static_cast<int>(i) + 1;
                break;
            }
        }
        records.push_back({{"id", r.program_id},
                           {"n", r.ranking.n},
                           {"truth", r.truth},
                           {"first_hit_rank", first_hit}});
    }
    nlohmann::json counts = nlohmann::json::object();
    nlohmann::json accuracy = nlohmann::json::object();
    for (int k : output.table.ks) {
        counts[std::to_string(k)] = output.table.counts.at(k);
        accuracy[std::to_string(k)] = output.table.accuracy.at(k);
    }
    nlohmann::json doc = {
        {"method", method_name}, {"ks", output.table.ks},   {"total", output.table.total},
        {"counts", counts},      {"accuracy", accuracy},    {"records", records},
        {"skipped", output.skipped},
    };
    fs::create_directories(out_dir);
    detail::write_json(out_dir / "eval.json", doc);
    write_file(out_dir / "eval.txt", detail::topk_text_table(method_name, output.table));
    return output;
}

inline JudgeResult cmd_judge(const fs::path& problem_dir, const fs::path& submission_dir,
                             const RunConfig& cfg, const fs::path& out_dir) {
    Problem prob = load_problem(problem_dir);
    Language lang = load_language(problem_dir);
    Submission sub = load_submission(submission_dir, lang);

    ScopedTempDir workdir("flame-judge-");
    JudgeResult result = judge_all(sub, prob, workdir.path(), cfg.toolchain);

    nlohmann::json outcomes = nlohmann::json::array();
    for (const auto& o : result.outcomes) {
        nlohmann::json item = {{"test_id", o.test_id},
                               {"verdict", verdict_to_string(o.verdict)},
                               {"wall_time_ms", o.wall_time_ms}};
        if (o.peak_memory_mb) item["peak_memory_mb"] = *o.peak_memory_mb;
        outcomes.push_back(std::move(item));
    }
    nlohmann::json doc = {
        {"compile",
         {{"success", result.compile.success}, {"diagnostics", result.compile.diagnostics}}},
        {"outcomes", outcomes},
        {"accepted", result.accepted()},
    };
    fs::create_directories(out_dir);
    detail::write_json(out_dir / "judge.json", doc);
    return result;
}

inline nlohmann::json cmd_retrieve(const fs::path& problem_dir, const fs::path& submission_dir,
                                   const RunConfig& cfg, const fs::path& out_dir) {
    Language lang = load_language(problem_dir);
    Submission sub = load_submission(submission_dir, lang);
    std::vector<Submission> pool = load_history_pool(problem_dir, lang);

    LlmClient client = make_client(cfg);
    FlatProgram flat = flatten(sub);
    Embedder embed = make_embedder(cfg, client);
    auto index = retrieve_reference_index(flat, pool, embed);

    nlohmann::json doc;
    if (!index) {
        doc = {{"reference", nullptr}, {"pool_size", pool.size()}};
    } else {
        double score = cosine(embed(flat.text()), embed(flatten(pool[*index]).text()));
        doc = {{"reference", {{"index", *index}, {"cosine", score}}},
               {"pool_size", pool.size()}};
    }
    fs::create_directories(out_dir);
    detail::write_json(out_dir / "retrieve.json", doc);
    return doc;
}

inline RepairExperiment cmd_repair(const fs::path& manifest_path,
                                   const std::vector<RepairSetting>& settings,
                                   const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    auto manifest = load_manifest(manifest_path);
    LlmClient client = make_client(cfg);

    bool need_localization =
        std::find(settings.begin(), settings.end(), RepairSetting::ASSISTED) != settings.end();

    std::vector<RepairEntry> entries;
    for (const auto& m : manifest) {
        RepairEntry entry;
        entry.program_id = m.id;
        entry.problem = load_problem(m.problem_dir);
        Language lang = load_language(m.problem_dir);
        entry.faulty = load_submission(m.faulty_dir, lang);
        if (need_localization) {
            std::vector<Submission> pool =
                cfg.toggles.use_reference ? load_history_pool(m.problem_dir, lang)
                                          : std::vector<Submission>{};
            entry.localization =
                run_localization(entry.problem, entry.faulty, cfg, client, pool).ranking;
        }
        entries.push_back(std::move(entry));
    }

    std::string repair_model = cfg.repair_model.empty() ? cfg.models.front() : cfg.repair_model;
    ScopedTempDir work_root("flame-repair-");
    RepairExperiment experiment = run_experiment(
        entries, client, cfg.backend_for(repair_model), settings, work_root.path(),
        cfg.completion_params(), cfg.toolchain, cfg.templates(), cfg.repair_top_lines,
        static_cast<std::size_t>(cfg.truncate_bytes));

    nlohmann::json outcomes = nlohmann::json::array();
    for (const auto& o : experiment.outcomes) {
        outcomes.push_back({{"id", o.program_id},
                            {"setting", repair_setting_to_string(o.setting)},
                            {"before_pass", o.before_pass},
                            {"after_pass", o.after_pass},
                            {"total_tests", o.total_tests},
                            {"compiled", o.compiled},
                            {"fixed", is_fixed(o)},
                            {"improved", is_improved(o)}});
    }
    nlohmann::json summary = nlohmann::json::object();
    for (RepairSetting s : settings) {
        summary[repair_setting_to_string(s)] = {
            {"fixed", experiment.summary.fixed[s]},
            {"improved", experiment.summary.improved[s]},
            {"total", experiment.summary.total[s]},
        };
    }
    nlohmann::json flow = nlohmann::json::array();
    for (const auto& [key, count] : experiment.summary.flow) {
        flow.push_back({{"from", key.first}, {"to", key.second}, {"count", count}});
    }
    nlohmann::json doc = {{"outcomes", outcomes}, {"summary", summary}, {"flow", flow}};
    fs::create_directories(out_dir);
    detail::write_json(out_dir / "repair.json", doc);
    return experiment;
}

} // namespace flame
