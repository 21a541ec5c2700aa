#pragma once

#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "flame/error.hpp"
#include "flame/textvec.hpp"
#include "flame/util.hpp"

namespace flame {

enum class BackendKind { REMOTE, MOCK };

struct ChatBackend {
    std::string name; // model identifier, unique within a configuration
    std::string base_url;
    BackendKind kind = BackendKind::REMOTE;
};

struct CompletionParams {
    double temperature = 0.1;
    std::optional<int> max_output_tokens;
};

struct EmbeddingVector {
    std::vector<double> values;

    int dim() const { return static_cast<int>(values.size()); }
    double norm() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }
    void normalize() {
        double n = norm();
        if (n == 0.0) return; // zero vector stays zero
        for (double& v : values) v /= n;
    }
};

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) throw Error("embedding dimension mismatch");
    double dot = 0.0;
    for (int i = 0; i < a.dim(); ++i) dot += a.values[i] * b.values[i];
    double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (na * nb);
}

// Feature-hashed token counts, L2-normalized. Deterministic across runs and
// platforms (fixed FNV seed). All-zero input yields the zero vector.
inline EmbeddingVector embed_local(const std::string& text, std::uint32_t dim = 1u << 16) {
    EmbeddingVector vec;
    vec.values.assign(dim, 0.0);
    for (const auto& [bucket, value] : hash_tokens(tokenize(text), dim).entries) {
        vec.values[bucket] = value;
    }
    vec.normalize();
    return vec;
}

// Key for canned mock responses: FNV-1a over length-prefixed fields, so the
// digest is unambiguous in (model name, system, user).
inline std::string mock_digest(const std::string& name, const std::string& system,
                               const std::string& user) {
    std::uint64_t h = 14695981039346656037ull;
    auto feed = [&](const std::string& field) {
        std::uint64_t len = field.size();
        char len_bytes[8];
        for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<char>((len >> (8 * i)) & 0xff);
        h = fnv1a64(std::string_view(len_bytes, 8), h);
        h = fnv1a64(field, h);
    };
    feed(name);
    feed(system);
    feed(user);
    return to_hex(h);
}

// Directory of <hex-digest>.txt files, read once at load and immutable after.
class MockStore {
  public:
    MockStore() = default;

    explicit MockStore(const fs::path& dir) : dir_(dir) {
        if (!fs::is_directory(dir)) throw ConfigError("mock directory not found: " + dir.string());
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
            responses_[entry.path().stem().string()] = read_file(entry.path());
        }
    }

    std::optional<std::string> lookup(const std::string& digest) const {
        auto it = responses_.find(digest);
        if (it == responses_.end()) return std::nullopt;
        return it->second;
    }

    const fs::path& dir() const { return dir_; }

  private:
    fs::path dir_;
    std::map<std::string, std::string> responses_;
};

// Caps concurrent in-flight remote requests.
class AdmissionGate {
  public:
    explicit AdmissionGate(int capacity) : available_(capacity) {}

    class Ticket {
      public:
        explicit Ticket(AdmissionGate& gate) : gate_(gate) { gate_.acquire(); }
        ~Ticket() { gate_.release(); }
        Ticket(const Ticket&) = delete;
        Ticket& operator=(const Ticket&) = delete;

      private:
        AdmissionGate& gate_;
    };

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

  private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

struct RetryPolicy {
    int attempts = 3;
    int initial_backoff_ms = 1000; // doubles per attempt
};

inline std::string backend_env_suffix(const std::string& name) {
    std::string out;
    for (char c : name) {
        unsigned char u = static_cast<unsigned char>(c);
        out.push_back(std::isalnum(u) ? static_cast<char>(std::toupper(u)) : '_');
    }
    return out;
}

namespace detail {

inline std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = base_url.find('/', host_start);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

} // namespace detail

// Chat-completion and embedding access across remote backends plus the
// deterministic offline mock. Immutable after construction; complete/embed
// may be called concurrently, bounded by the admission gate.
class LlmClient {
  public:
    struct Options {
        int parallelism = 4;
        RetryPolicy retry;
        std::optional<fs::path> mock_dir;
        int timeout_s = 120;
    };

    LlmClient() : LlmClient(Options{}) {}

    explicit LlmClient(Options options)
        : options_(std::move(options)), gate_(options_.parallelism) {
        if (options_.mock_dir) mock_ = MockStore(*options_.mock_dir);
    }

    const MockStore& mock_store() const { return mock_; }

    std::string complete(const ChatBackend& backend, const std::string& system,
                         const std::string& user, const CompletionParams& params) const {
        if (backend.kind == BackendKind::MOCK) {
            std::string digest = mock_digest(backend.name, system, user);
            auto canned = mock_.lookup(digest);
            if (!canned) {
                throw BackendError("no canned response for backend '" + backend.name +
                                   "' (digest " + digest + ")");
            }
            return *canned;
        }

        nlohmann::json body = {
            {"model", backend.name},
            {"messages",
             {{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}}},
            {"temperature", params.temperature},
        };
        if (params.max_output_tokens) body["max_tokens"] = *params.max_output_tokens;

        auto response = post_json(backend, "/v1/chat/completions", body);
        try {
            return response.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError("malformed completion from backend '" + backend.name +
                               "': " + e.what());
        }
    }

    EmbeddingVector embed_remote(const ChatBackend& backend, const std::string& text) const {
        if (text.empty()) throw BackendError("empty input for embedding");
        nlohmann::json body = {{"model", backend.name}, {"input", text}};
        auto response = post_json(backend, "/v1/embeddings", body);
        EmbeddingVector vec;
        try {
            for (const auto& v : response.at("data").at(0).at("embedding")) {
                vec.values.push_back(v.get<double>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw BackendError("malformed embedding from backend '" + backend.name +
                               "': " + e.what());
        }
        if (vec.values.empty()) throw BackendError("empty embedding from '" + backend.name + "'");
        vec.normalize();
        return vec;
    }

  private:
    nlohmann::json post_json(const ChatBackend& backend, const std::string& endpoint,
                             const nlohmann::json& body) const {
        AdmissionGate::Ticket ticket(gate_);

        std::string base_url = backend.base_url;
        if (const char* env = std::getenv(("FLAME_BASE_URL_" + backend_env_suffix(backend.name)).c_str())) {
            base_url = env;
        }
        if (base_url.empty()) {
            throw BackendError("no base URL configured for backend '" + backend.name + "'");
        }
        auto [host, path_prefix] = detail::split_base_url(base_url);

        httplib::Headers headers;
        if (const char* key = std::getenv(("FLAME_API_KEY_" + backend_env_suffix(backend.name)).c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        std::string last_error;
        for (int attempt = 0; attempt < options_.retry.attempts; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(
                    options_.retry.initial_backoff_ms * (1 << (attempt - 1))));
            }
            httplib::Client cli(host);
            cli.set_connection_timeout(options_.timeout_s, 0);
            cli.set_read_timeout(options_.timeout_s, 0);
            auto res = cli.Post(path_prefix + endpoint, headers, body.dump(), "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403) {
                throw BackendError("authentication failed for backend '" + backend.name +
                                   "' (HTTP " + std::to_string(res->status) + ")");
            }
            if (res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw BackendError("backend '" + backend.name + "' returned HTTP " +
                                   std::to_string(res->status) + ": " + res->body);
            }
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw BackendError("invalid JSON from backend '" + backend.name +
                                   "': " + e.what());
            }
        }
        throw BackendError("backend '" + backend.name + "' unreachable after " +
                           std::to_string(options_.retry.attempts) + " attempts (" + last_error +
                           ")");
    }

    Options options_;
    mutable AdmissionGate gate_;
    MockStore mock_;
};

} // namespace flame
