#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flame/annotate.hpp"
#include "flame/context.hpp"
#include "flame/error.hpp"
#include "flame/judge.hpp"
#include "flame/llm.hpp"
#include "flame/vote.hpp"

namespace flame {

namespace detail {

// Minimal TOML reader covering what run configs need: [table.paths],
// key = value with basic strings, integers, floats, booleans, and flat
// arrays. Parsed into a JSON tree so TOML and JSON configs share one reader.
class TomlParser {
  public:
    static nlohmann::json parse(const std::string& text) {
        TomlParser p;
        for (auto& raw : split_lines(text)) {
            p.line_no_++;
            std::string line = strip(p.strip_comment(raw));
            if (line.empty()) continue;
            if (line.front() == '[') p.enter_table(line);
            else p.assign(line);
        }
        return p.root_;
    }

  private:
    nlohmann::json root_ = nlohmann::json::object();
    std::vector<std::string> table_;
    int line_no_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config line " + std::to_string(line_no_) + ": " + what);
    }

    std::string strip_comment(const std::string& line) const {
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
            if (c == '#' && !in_string) return line.substr(0, i);
        }
        return line;
    }

    std::vector<std::string> split_key_path(const std::string& text) const {
        std::vector<std::string> parts;
        std::string cur;
        bool in_string = false;
        for (char c : text) {
            if (c == '"') {
                in_string = !in_string;
                continue;
            }
            if (c == '.' && !in_string) {
                parts.push_back(strip(cur));
                cur.clear();
                continue;
            }
            cur.push_back(c);
        }
        parts.push_back(strip(cur));
        for (const auto& p : parts) {
            if (p.empty()) fail("empty key segment");
        }
        return parts;
    }

    void enter_table(const std::string& line) {
        if (line.back() != ']') fail("unterminated table header");
        table_ = split_key_path(strip(line.substr(1, line.size() - 2)));
    }

    nlohmann::json parse_scalar(const std::string& text) const {
        if (text.empty()) fail("missing value");
        if (text.front() == '"') {
            if (text.size() < 2 || text.back() != '"') fail("unterminated string");
            std::string out;
            for (std::size_t i = 1; i + 1 < text.size(); ++i) {
                char c = text[i];
                if (c == '\\' && i + 2 < text.size() + 1) {
                    char e = text[++i];
                    switch (e) {
                        case 'n': out.push_back('\n'); break;
                        case 't': out.push_back('\t'); break;
                        case 'r': out.push_back('\r'); break;
                        case '"': out.push_back('"'); break;
                        case '\\': out.push_back('\\'); break;
                        default: fail(std::string("bad escape \\") + e);
                    }
                } else {
                    out.push_back(c);
                }
            }
            return out;
        }
        if (text == "true") return true;
        if (text == "false") return false;
        try {
            if (text.find_first_of(".eE") != std::string::npos &&
                text.find_first_not_of("+-0123456789.eE") == std::string::npos) {
                return std::stod(text);
            }
            std::size_t used = 0;
            long long v = std::stoll(text, &used);
            if (used == text.size()) return v;
        } catch (...) {
        }
        fail("cannot parse value: " + text);
    }

    nlohmann::json parse_value(const std::string& text) const {
        if (!text.empty() && text.front() == '[') {
            if (text.back() != ']') fail("unterminated array");
            nlohmann::json arr = nlohmann::json::array();
            std::string body = text.substr(1, text.size() - 2);
            std::string cur;
            bool in_string = false;
            for (char c : body) {
                if (c == '"') in_string = !in_string;
                if (c == ',' && !in_string) {
                    if (!strip(cur).empty()) arr.push_back(parse_scalar(strip(cur)));
                    cur.clear();
                    continue;
                }
                cur.push_back(c);
            }
            if (!strip(cur).empty()) arr.push_back(parse_scalar(strip(cur)));
            return arr;
        }
        return parse_scalar(text);
    }

    void assign(const std::string& line) {
        bool in_string = false;
        std::size_t eq = std::string::npos;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            if (line[i] == '=' && !in_string) {
                eq = i;
                break;
            }
        }
        if (eq == std::string::npos) fail("expected key = value");
        auto keys = split_key_path(strip(line.substr(0, eq)));
        nlohmann::json* node = &root_;
        for (const auto& t : table_) node = &(*node)[t];
        for (std::size_t i = 0; i + 1 < keys.size(); ++i) node = &(*node)[keys[i]];
        (*node)[keys.back()] = parse_value(strip(line.substr(eq + 1)));
    }
};

} // namespace detail

struct BackendEntry {
    std::string kind = "remote"; // "remote" | "mock"
    std::string base_url;
};

struct RunConfig {
    std::vector<std::string> models = {"claude-3-7-sonnet", "deepseek-v3", "deepseek-r1"};
    int rounds = 2;
    double temperature = 0.1;
    double similarity_threshold = 0.9;
    int collapse_threshold_lines = 600;
    int parallelism = 4;
    ContextToggles toggles;
    VoteMode vote_mode = VoteMode::WEIGHTED;
    AnnotationMode annotation_mode = AnnotationMode::MARKER;
    int truncate_bytes = 4096;
    int repair_top_lines = 5;
    std::string repair_model;        // chat backend for repair; first model if empty
    std::string embedding = "local"; // "local" | "remote"
    std::string embedding_backend;   // backend name for remote embeddings
    std::optional<fs::path> mock_dir;
    std::optional<fs::path> prompt_dir;
    std::map<std::string, BackendEntry> backends;
    ToolchainConfig toolchain;

    void validate() const {
        if (models.empty()) throw ConfigError("invalid config: models must be non-empty");
        if (rounds < 1) throw ConfigError("invalid config: rounds must be >= 1");
        if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0)) {
            throw ConfigError("invalid config: similarity_threshold must be in (0, 1]");
        }
        if (temperature < 0.0 || temperature > 2.0) {
            throw ConfigError("invalid config: temperature must be in [0, 2]");
        }
        if (parallelism < 1) throw ConfigError("invalid config: parallelism must be >= 1");
        if (collapse_threshold_lines < 1) {
            throw ConfigError("invalid config: collapse_threshold_lines must be >= 1");
        }
        if (embedding != "local" && embedding != "remote") {
            throw ConfigError("invalid config: embedding must be 'local' or 'remote'");
        }
    }

    // All mock or per-entry configuration; unknown names default to remote.
    ChatBackend backend_for(const std::string& name) const {
        ChatBackend backend;
        backend.name = name;
        if (mock_dir) {
            backend.kind = BackendKind::MOCK;
            return backend;
        }
        auto it = backends.find(name);
        if (it != backends.end()) {
            backend.kind = it->second.kind == "mock" ? BackendKind::MOCK : BackendKind::REMOTE;
            backend.base_url = it->second.base_url;
        }
        return backend;
    }

    CompletionParams completion_params() const {
        CompletionParams params;
        params.temperature = temperature;
        return params;
    }

    PromptTemplates templates() const {
        return prompt_dir ? PromptTemplates::load(*prompt_dir) : PromptTemplates{};
    }
};

namespace detail {

inline void read_config_tree(const nlohmann::json& tree, RunConfig& cfg) {
    auto get = [&](const char* key, auto& slot) {
        if (tree.contains(key)) {
            try {
                slot = tree.at(key).get<std::decay_t<decltype(slot)>>();
            } catch (const nlohmann::json::exception&) {
                throw ConfigError(std::string("invalid config value for '") + key + "'");
            }
        }
    };
    get("models", cfg.models);
    get("rounds", cfg.rounds);
    get("temperature", cfg.temperature);
    get("similarity_threshold", cfg.similarity_threshold);
    get("collapse_threshold_lines", cfg.collapse_threshold_lines);
    get("parallelism", cfg.parallelism);
    get("truncate_bytes", cfg.truncate_bytes);
    get("repair_top_lines", cfg.repair_top_lines);
    get("repair_model", cfg.repair_model);
    get("embedding", cfg.embedding);
    get("embedding_backend", cfg.embedding_backend);

    if (tree.contains("vote_mode")) {
        std::string mode = lowercase(tree.at("vote_mode").get<std::string>());
        if (mode == "weighted") cfg.vote_mode = VoteMode::WEIGHTED;
        else if (mode == "unweighted") cfg.vote_mode = VoteMode::UNWEIGHTED;
        else throw ConfigError("invalid config: vote_mode must be weighted|unweighted");
    }
    if (tree.contains("annotation_mode")) {
        std::string mode = lowercase(tree.at("annotation_mode").get<std::string>());
        if (mode == "marker") cfg.annotation_mode = AnnotationMode::MARKER;
        else if (mode == "line_numbers" || mode == "numbers") {
            cfg.annotation_mode = AnnotationMode::LINE_NUMBERS;
        } else {
            throw ConfigError("invalid config: annotation_mode must be marker|line_numbers");
        }
    }
    if (tree.contains("mock_dir")) cfg.mock_dir = tree.at("mock_dir").get<std::string>();
    if (tree.contains("prompt_dir")) cfg.prompt_dir = tree.at("prompt_dir").get<std::string>();

    if (tree.contains("toggles")) {
        const auto& t = tree.at("toggles");
        auto toggle = [&](const char* key, bool& slot) {
            if (t.contains(key)) slot = t.at(key).get<bool>();
        };
        toggle("use_statement", cfg.toggles.use_statement);
        toggle("use_test", cfg.toggles.use_test);
        toggle("use_reference", cfg.toggles.use_reference);
    }
    if (tree.contains("backends")) {
        for (const auto& [name, entry] : tree.at("backends").items()) {
            BackendEntry be;
            if (entry.contains("kind")) be.kind = lowercase(entry.at("kind").get<std::string>());
            if (entry.contains("base_url")) be.base_url = entry.at("base_url").get<std::string>();
            if (be.kind != "remote" && be.kind != "mock") {
                throw ConfigError("invalid config: backend kind must be remote|mock");
            }
            cfg.backends[name] = be;
        }
    }
    if (tree.contains("toolchain")) {
        const auto& t = tree.at("toolchain");
        auto cmd = [&](const char* key, std::string& slot) {
            if (t.contains(key)) slot = t.at(key).get<std::string>();
        };
        cmd("c_compile", cfg.toolchain.c_compile);
        cmd("cpp_compile", cfg.toolchain.cpp_compile);
        cmd("java_compile", cfg.toolchain.java_compile);
        cmd("java_run", cfg.toolchain.java_run);
        cmd("java_main_class", cfg.toolchain.java_main_class);
        cmd("gcov", cfg.toolchain.gcov);
    }
}

} // namespace detail

// TOML and JSON are accepted interchangeably; JSON is detected by a leading
// '{' or a .json extension.
inline RunConfig parse_config(const std::string& text, bool is_json) {
    nlohmann::json tree;
    if (is_json) {
        try {
            tree = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("invalid JSON config: ") + e.what());
        }
    } else {
        tree = detail::TomlParser::parse(text);
    }
    RunConfig cfg;
    detail::read_config_tree(tree, cfg);
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error&) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    bool is_json = path.extension() == ".json" ||
                   (!strip(text).empty() && strip(text).front() == '{');
    return parse_config(text, is_json);
}

} // namespace flame
