#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>
#ifdef _res
#undef _res // glibc resolv.h macro; breaks any later header using _res as a name
#endif
#include <json.hpp>

#include "vulnassess/vir.hpp"

namespace vulnassess {

struct ProviderConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model_name = "gpt-3.5-turbo";
    std::string api_key_env = "VULN_ASSESS_API_KEY";
    int max_retries = 2;
    std::chrono::seconds timeout{30};
    int max_concurrent = 4;
    std::filesystem::path cache_dir = ".vir-cache";
};

class Provider {
  public:
    virtual ~Provider() = default;
    virtual std::string complete(const std::string &prompt) = 0;
    virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// deterministic mock provider
// ---------------------------------------------------------------------------

namespace detail {

inline uint64_t fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ull) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    static const char *digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

} // namespace detail

/// Fixture-backed provider for tests and offline runs. Responses are a
/// deterministic function of the prompt; failure modes are configurable.
class MockProvider : public Provider {
  public:
    struct Options {
        int fail_first = 0;          // transport failures before succeeding
        bool always_malformed = false;
        int latency_ms = 0;
        std::string canned_response; // verbatim response when non-empty
    };

    MockProvider() = default;
    explicit MockProvider(Options opt) : opt_(std::move(opt)) {
        fails_remaining_ = opt_.fail_first;
    }

    std::string complete(const std::string &prompt) override {
        int now = ++in_flight_;
        int seen = max_in_flight_.load();
        while (now > seen && !max_in_flight_.compare_exchange_weak(seen, now)) {}
        ++total_calls_;
        if (opt_.latency_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(opt_.latency_ms));
        struct Dec {
            std::atomic<int> &g;
            ~Dec() { --g; }
        } dec{in_flight_};

        if (fails_remaining_ > 0) {
            --fails_remaining_;
            throw TransportError("mock transport failure");
        }
        if (opt_.always_malformed) return "no sections here";
        if (!opt_.canned_response.empty()) return opt_.canned_response;

        uint64_t h = detail::fnv1a64(prompt);
        static const char *impacts[] = {"memory corruption", "information disclosure",
                                        "denial of service", "arbitrary command execution"};
        static const char *scopes[] = {"the affected component only", "the whole process",
                                       "the host system", "adjacent systems"};
        return "Exploitability:\nCondition: attacker-influenced input reaches the flagged "
               "statement (case " +
               detail::hex64(h).substr(0, 6) +
               ").\nWay: craft input that drives the sliced path.\nImpact:\n" +
               impacts[h % 4] + "\nScope:\n" + scopes[(h >> 8) % 4];
    }

    std::string id() const override { return "mock"; }

    int total_calls() const { return total_calls_.load(); }
    int max_in_flight() const { return max_in_flight_.load(); }

  private:
    Options opt_;
    std::atomic<int> fails_remaining_{0};
    std::atomic<int> total_calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};

  public:
    void set_failures(int n) { fails_remaining_ = n; }
};

// ---------------------------------------------------------------------------
// HTTP chat-completion provider
// ---------------------------------------------------------------------------

class HttpProvider : public Provider {
  public:
    explicit HttpProvider(const ProviderConfig &cfg) : cfg_(cfg) {
        const char *key = std::getenv(cfg.api_key_env.c_str());
        if (!key || !*key) throw MissingApiKey(cfg.api_key_env);
        api_key_ = key;
    }

    std::string complete(const std::string &prompt) override {
        auto [base, path] = split_url(cfg_.endpoint);
        httplib::Client client(base);
        client.set_connection_timeout(cfg_.timeout);
        client.set_read_timeout(cfg_.timeout);
        client.set_write_timeout(cfg_.timeout);

        nlohmann::json payload = {
            {"model", cfg_.model_name},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", 0.0}};
        httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
        auto res = client.Post(path, headers, payload.dump(), "application/json");
        if (!res) throw TransportError("no response from " + base);
        if (res->status != 200)
            throw TransportError("status " + std::to_string(res->status) + ": " + res->body);
        try {
            auto doc = nlohmann::json::parse(res->body);
            return doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception &e) {
            throw TransportError(std::string("unexpected response shape: ") + e.what());
        }
    }

    std::string id() const override { return "http:" + cfg_.model_name; }

  private:
    static std::pair<std::string, std::string> split_url(const std::string &url) {
        auto scheme_end = url.find("://");
        size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        auto path_start = url.find('/', host_start);
        if (path_start == std::string::npos) return {url, "/"};
        return {url.substr(0, path_start), url.substr(path_start)};
    }

    ProviderConfig cfg_;
    std::string api_key_;
};

// ---------------------------------------------------------------------------
// generation with cache, retries, bounded concurrency
// ---------------------------------------------------------------------------

namespace detail {

class Semaphore {
  public:
    explicit Semaphore(int slots) : slots_(slots) {}
    void acquire() {
        std::unique_lock lk(m_);
        cv_.wait(lk, [&] { return slots_ > 0; });
        --slots_;
    }
    void release() {
        {
            std::lock_guard lk(m_);
            ++slots_;
        }
        cv_.notify_one();
    }

  private:
    std::mutex m_;
    std::condition_variable cv_;
    int slots_;
};

struct SlotGuard {
    Semaphore &s;
    explicit SlotGuard(Semaphore &sem) : s(sem) { s.acquire(); }
    ~SlotGuard() { s.release(); }
};

} // namespace detail

inline std::string vir_cache_key(const std::string &prompt, const ProviderConfig &cfg,
                                 const PromptTemplate &tpl) {
    uint64_t h = detail::fnv1a64(prompt);
    h = detail::fnv1a64(cfg.model_name, h ^ 0x9e3779b97f4a7c15ull);
    h = detail::fnv1a64(tpl.version, h ^ 0x2545f4914f6cdd1dull);
    return detail::hex64(h);
}

inline std::filesystem::path vir_cache_path(const ProviderConfig &cfg, const std::string &key) {
    return cfg.cache_dir / key.substr(0, 2) / (key + ".vir");
}

/// Serializes one provider session: content-addressed cache in front, retry on
/// malformed or failed responses, at most max_concurrent requests in flight.
class VirEngine {
  public:
    VirEngine(ProviderConfig cfg, PromptTemplate tpl, Provider &provider)
        : cfg_(std::move(cfg)), tpl_(std::move(tpl)), provider_(provider),
          slots_(std::max(1, cfg_.max_concurrent)) {}

    Vir generate(const std::string &code) {
        std::string prompt = build_prompt(code, tpl_);
        std::string key = vir_cache_key(prompt, cfg_, tpl_);
        auto path = vir_cache_path(cfg_, key);

        if (std::filesystem::exists(path)) {
            std::ifstream in(path);
            nlohmann::json doc;
            in >> doc;
            ++cache_hits_;
            return load_vir(doc);
        }

        std::string last_cause = "no attempt made";
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            try {
                std::string response;
                {
                    detail::SlotGuard guard(slots_);
                    response = provider_.complete(prompt);
                }
                Vir v = parse_vir(response);
                v.provider_id = provider_.id();
                v.template_version = tpl_.version;
                write_cache(path, v);
                return v;
            } catch (const Error &e) {
                last_cause = e.what();
            }
        }
        throw ProviderExhausted(cfg_.max_retries + 1, last_cause);
    }

    int cache_hits() const { return cache_hits_.load(); }
    const PromptTemplate &prompt_template() const { return tpl_; }

  private:
    void write_cache(const std::filesystem::path &path, const Vir &v) {
        namespace fs = std::filesystem;
        fs::create_directories(path.parent_path());
        static std::atomic<uint64_t> ctr{0};
        fs::path tmp = path.parent_path() /
                       (".tmp-" + std::to_string(++ctr) + "-" +
                        std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
        {
            std::ofstream out(tmp);
            out << store_vir(v).dump(2) << "\n";
        }
        fs::rename(tmp, path); // atomic publish
    }

    ProviderConfig cfg_;
    PromptTemplate tpl_;
    Provider &provider_;
    detail::Semaphore slots_;
    std::atomic<int> cache_hits_{0};
};

/// One-shot convenience wrapper around VirEngine.
inline Vir generate_vir(const std::string &code, const ProviderConfig &cfg,
                        const PromptTemplate &tpl, Provider &provider) {
    VirEngine engine(cfg, tpl, provider);
    return engine.generate(code);
}

} // namespace vulnassess
