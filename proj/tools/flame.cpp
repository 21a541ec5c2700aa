// Command-line front end: localize, eval, judge, retrieve, repair.
// Exit codes: 0 success, 2 usage/config/dataset, 3 environment, 4 backend.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flame/flame.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string mock_dir;
    std::string out_dir = "out";

    // config overrides
    std::vector<std::string> models;
    int rounds = -1;
    double temperature = -1.0;
    double similarity_threshold = -1.0;
    int parallelism = -1;
    std::string vote_mode;
    std::string annotation_mode;
    bool no_statement = false;
    bool no_test = false;
    bool no_reference = false;
};

flame::RunConfig resolve_config(const GlobalArgs& args) {
    flame::RunConfig cfg;
    if (!args.config_path.empty()) cfg = flame::load_config(args.config_path);
    if (!args.mock_dir.empty()) cfg.mock_dir = args.mock_dir;
    if (!args.models.empty()) cfg.models = args.models;
    if (args.rounds >= 0) cfg.rounds = args.rounds;
    if (args.temperature >= 0.0) cfg.temperature = args.temperature;
    if (args.similarity_threshold >= 0.0) cfg.similarity_threshold = args.similarity_threshold;
    if (args.parallelism >= 0) cfg.parallelism = args.parallelism;
    if (!args.vote_mode.empty()) {
        cfg.vote_mode = flame::lowercase(args.vote_mode) == "unweighted"
                            ? flame::VoteMode::UNWEIGHTED
                            : flame::VoteMode::WEIGHTED;
    }
    if (!args.annotation_mode.empty()) {
        cfg.annotation_mode = flame::lowercase(args.annotation_mode) == "line_numbers"
                                  ? flame::AnnotationMode::LINE_NUMBERS
                                  : flame::AnnotationMode::MARKER;
    }
    if (args.no_statement) cfg.toggles.use_statement = false;
    if (args.no_test) cfg.toggles.use_test = false;
    if (args.no_reference) cfg.toggles.use_reference = false;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explainable line-level fault localization for programming assignments"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "Config file (TOML or JSON)");
    app.add_option("--mock-dir", args.mock_dir,
                   "Directory of canned responses; forces all backends to mock");
    app.add_option("--out", args.out_dir, "Output directory");
    app.add_option("--models", args.models, "Backend names (overrides config)")->delimiter(',');
    app.add_option("--rounds", args.rounds, "Annotation rounds per model");
    app.add_option("--temperature", args.temperature, "Sampling temperature");
    app.add_option("--similarity-threshold", args.similarity_threshold,
                   "Fuzzy line-match threshold");
    app.add_option("--parallelism", args.parallelism, "Max concurrent backend requests");
    app.add_option("--vote-mode", args.vote_mode, "weighted|unweighted");
    app.add_option("--annotation-mode", args.annotation_mode, "marker|line_numbers");
    app.add_flag("--no-statement", args.no_statement, "Drop the problem statement");
    app.add_flag("--no-test", args.no_test, "Drop the failing test");
    app.add_flag("--no-reference", args.no_reference, "Drop the reference program");

    std::string problem_dir, submission_dir, manifest_path;
    std::string method = "flame";
    std::vector<int> ks = {1, 3, 5, 10};
    std::vector<std::string> settings = {"plain", "assisted"};

    auto* localize = app.add_subcommand("localize", "Rank suspicious lines of one submission");
    localize->add_option("problem", problem_dir, "Problem directory")->required();
    localize->add_option("submission", submission_dir, "Submission directory")->required();

    auto* eval = app.add_subcommand("eval", "Top-k evaluation over a manifest of pairs");
    eval->add_option("--manifest", manifest_path, "Manifest JSON")->required();
    eval->add_option("--method", method, "flame|ochiai");
    eval->add_option("--ks", ks, "Top-k cutoffs")->delimiter(',');

    auto* judge = app.add_subcommand("judge", "Compile and run a submission against the tests");
    judge->add_option("problem", problem_dir, "Problem directory")->required();
    judge->add_option("submission", submission_dir, "Submission directory")->required();

    auto* retrieve = app.add_subcommand("retrieve", "Pick the closest accepted submission");
    retrieve->add_option("problem", problem_dir, "Problem directory")->required();
    retrieve->add_option("submission", submission_dir, "Submission directory")->required();

    auto* repair = app.add_subcommand("repair", "Run the repair experiment over a manifest");
    repair->add_option("--manifest", manifest_path, "Manifest JSON")->required();
    repair->add_option("--settings", settings, "plain,assisted")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        flame::RunConfig cfg = resolve_config(args);
        flame::fs::path out_dir = args.out_dir;

        if (localize->parsed()) {
            auto run = flame::cmd_localize(problem_dir, submission_dir, cfg, out_dir);
            int flagged = 0;
            for (const auto& [_, score] : run.ranking.scores) {
                if (score > 0.0) ++flagged;
            }
            std::cout << "localized " << flagged << " suspicious line(s); report in "
                      << (out_dir / "report.json").string() << "\n";
        } else if (eval->parsed()) {
            flame::EvalMethod m = flame::lowercase(method) == "ochiai"
                                      ? flame::EvalMethod::OCHIAI
                                      : flame::EvalMethod::FLAME;
            if (flame::lowercase(method) != "ochiai" && flame::lowercase(method) != "flame") {
                throw flame::ConfigError("unknown eval method: " + method);
            }
            auto output = flame::cmd_eval(manifest_path, m, ks, cfg, out_dir);
            std::cout << flame::read_file(out_dir / "eval.txt");
        } else if (judge->parsed()) {
            auto result = flame::cmd_judge(problem_dir, submission_dir, cfg, out_dir);
            if (!result.compiled()) {
                std::cout << "CE\n";
            } else {
                for (const auto& o : result.outcomes) {
                    std::cout << o.test_id << " " << flame::verdict_to_string(o.verdict) << "\n";
                }
            }
        } else if (retrieve->parsed()) {
            auto doc = flame::cmd_retrieve(problem_dir, submission_dir, cfg, out_dir);
            if (doc.at("reference").is_null()) {
                std::cout << "no reference\n";
            } else {
                std::cout << "reference index " << doc["reference"]["index"] << " (cosine "
                          << doc["reference"]["cosine"] << ")\n";
            }
        } else if (repair->parsed()) {
            std::vector<flame::RepairSetting> parsed;
            for (const auto& s : settings) {
                std::string low = flame::lowercase(s);
                if (low == "plain") parsed.push_back(flame::RepairSetting::PLAIN);
                else if (low == "assisted") parsed.push_back(flame::RepairSetting::ASSISTED);
                else throw flame::ConfigError("unknown repair setting: " + s);
            }
            auto experiment = flame::cmd_repair(manifest_path, parsed, cfg, out_dir);
            for (const auto& setting : parsed) {
                std::cout << flame::repair_setting_to_string(setting) << ": fixed "
                          << experiment.summary.fixed[setting] << ", improved "
                          << experiment.summary.improved[setting] << " of "
                          << experiment.summary.total[setting] << "\n";
            }
        }
        return 0;
    } catch (const flame::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const flame::DatasetError& e) {
        std::cerr << "dataset error: " << e.what() << "\n";
        return 2;
    } catch (const flame::EnvironmentError& e) {
        std::cerr << "environment error: " << e.what() << "\n";
        return 3;
    } catch (const flame::BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
