// Answerer backed by an OpenAI-style chat-completions endpoint. The request
// body is composed from the answer request alone: lettered options after the
// question, and the image reference attached as an image_url content part in
// multimodal mode. Connection failures and retryable statuses (429, 5xx) are
// retried with exponential backoff and surface as TransportError once the
// budget is spent; a reply that is not a valid completions envelope is a
// ProtocolError. Auth tokens are read from the environment variable named in
// the config, never from the config file itself.
#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "hopbench/common.hpp"
#include "hopbench/gateway.hpp"

namespace hopbench {

struct EndpointConfig {
    std::string base_url;
    std::string model;
    std::string auth_env;
    double timeout_s = 30.0;
    int max_retries = 2;
    int parallelism = 4;
    bool cache = false;  // memoize replies keyed on the request
};

inline EndpointConfig endpoint_config_from_json(const nlohmann::json& j) {
    EndpointConfig cfg;
    if (!j.is_object() || !j.contains("base_url") || !j.contains("model"))
        throw LoadError("endpoint config needs base_url and model");
    cfg.base_url = j.at("base_url").get<std::string>();
    cfg.model = j.at("model").get<std::string>();
    if (j.contains("auth_env")) cfg.auth_env = j.at("auth_env").get<std::string>();
    if (j.contains("timeout_s")) cfg.timeout_s = j.at("timeout_s").get<double>();
    if (j.contains("max_retries")) cfg.max_retries = j.at("max_retries").get<int>();
    if (j.contains("parallelism")) cfg.parallelism = j.at("parallelism").get<int>();
    if (j.contains("cache")) cfg.cache = j.at("cache").get<bool>();
    if (cfg.timeout_s <= 0 || cfg.max_retries < 0 || cfg.parallelism < 1)
        throw LoadError("endpoint config has out-of-range values");
    return cfg;
}

inline EndpointConfig load_endpoint_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open endpoint config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw LoadError("bad endpoint config " + path + ": " + e.what());
    }
    return endpoint_config_from_json(j);
}

enum class HttpMode { Multimodal, QuestionOnly };

namespace detail {

struct SplitUrl {
    std::string host;  // scheme://authority, what httplib::Client takes
    std::string prefix;
};

inline SplitUrl split_base_url(const std::string& base_url) {
    SplitUrl out;
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw LoadError("base_url needs a scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        out.host = base_url;
    } else {
        out.host = base_url.substr(0, path_start);
        out.prefix = base_url.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    return out;
}

inline std::string completions_path(const std::string& prefix) {
    if (prefix.size() >= 17 && prefix.compare(prefix.size() - 17, 17, "/chat/completions") == 0)
        return prefix;
    return prefix + "/v1/chat/completions";
}

inline std::string lettered_prompt(const AnswerRequest& req) {
    std::string prompt = req.question;
    if (!req.option_texts.empty()) {
        prompt += "\nOptions:";
        for (std::size_t i = 0; i < req.option_texts.size(); ++i) {
            prompt += "\n";
            prompt += static_cast<char>('A' + i);
            prompt += ". " + req.option_texts[i];
        }
        prompt += "\nAnswer with the letter of the correct option.";
    }
    return prompt;
}

}  // namespace detail

class HttpAnswerer : public Answerer {
public:
    explicit HttpAnswerer(EndpointConfig cfg, HttpMode mode = HttpMode::Multimodal)
        : cfg_(std::move(cfg)), mode_(mode), url_(detail::split_base_url(cfg_.base_url)) {}

    AnswerRecord answer(const AnswerRequest& req) override {
        std::string body = request_body(req).dump();
        std::string reply = post_with_retries(body);
        return make_answer_record(extract_content(reply), req.option_texts);
    }

    // Dispatches requests across up to `parallelism` workers; failures become
    // Invalid records so one bad call never sinks the batch.
    struct BatchResult {
        std::vector<AnswerRecord> records;
        std::size_t transport_failures = 0;
        std::size_t protocol_failures = 0;
    };

    BatchResult answer_batch(const std::vector<AnswerRequest>& requests) {
        BatchResult out;
        out.records.resize(requests.size());
        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> transport{0};
        std::atomic<std::size_t> protocol{0};
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= requests.size()) return;
                try {
                    out.records[i] = answer(requests[i]);
                } catch (const TransportError& e) {
                    transport.fetch_add(1);
                    out.records[i] = invalid_record(e.what());
                } catch (const ProtocolError& e) {
                    protocol.fetch_add(1);
                    out.records[i] = invalid_record(e.what());
                }
            }
        };
        std::size_t n_workers = std::min<std::size_t>(
            requests.size(), static_cast<std::size_t>(cfg_.parallelism));
        if (n_workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> threads;
            threads.reserve(n_workers);
            for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
            for (auto& th : threads) th.join();
        }
        out.transport_failures = transport.load();
        out.protocol_failures = protocol.load();
        return out;
    }

    std::string name() const override { return "http:" + cfg_.model; }
    bool deterministic() const override { return false; }

    const EndpointConfig& config() const { return cfg_; }

private:
    static AnswerRecord invalid_record(const std::string& why) {
        AnswerRecord rec;
        rec.raw_text = "[error] " + why;
        rec.choice_index = kInvalidChoice;
        rec.canonical_answer = rec.raw_text;
        return rec;
    }

    nlohmann::json request_body(const AnswerRequest& req) const {
        std::string prompt = detail::lettered_prompt(req);
        nlohmann::json message{{"role", "user"}};
        if (mode_ == HttpMode::Multimodal && req.image_ref.has_value()) {
            message["content"] = nlohmann::json::array(
                {{{"type", "text"}, {"text", prompt}},
                 {{"type", "image_url"}, {"image_url", {{"url", *req.image_ref}}}}});
        } else {
            message["content"] = prompt;
        }
        return nlohmann::json{{"model", cfg_.model},
                              {"messages", nlohmann::json::array({message})},
                              {"temperature", 0.0}};
    }

    std::string post_with_retries(const std::string& body) const {
        httplib::Headers headers;
        if (!cfg_.auth_env.empty()) {
            const char* token = std::getenv(cfg_.auth_env.c_str());
            if (token && *token) headers.emplace("Authorization", std::string("Bearer ") + token);
        }
        std::string path = detail::completions_path(url_.prefix);
        std::string last_error;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                auto backoff = std::chrono::milliseconds(100LL << (attempt - 1));
                std::this_thread::sleep_for(backoff);
            }
            httplib::Client cli(url_.host);
            auto whole = std::chrono::duration<double>(cfg_.timeout_s);
            cli.set_connection_timeout(whole);
            cli.set_read_timeout(whole);
            cli.set_write_timeout(whole);
            auto res = cli.Post(path, headers, body, "application/json");
            if (!res) {
                last_error = "connection failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw ProtocolError("endpoint returned status " + std::to_string(res->status));
            return res->body;
        }
        throw TransportError("gave up after " + std::to_string(cfg_.max_retries + 1) +
                             " attempts: " + last_error);
    }

    static std::string extract_content(const std::string& body) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception&) {
            throw ProtocolError("reply body is not JSON");
        }
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
            throw ProtocolError("reply has no choices");
        const auto& first = j["choices"][0];
        if (!first.contains("message") || !first["message"].contains("content") ||
            !first["message"]["content"].is_string())
            throw ProtocolError("reply choice has no message content");
        return first["message"]["content"].get<std::string>();
    }

    EndpointConfig cfg_;
    HttpMode mode_;
    detail::SplitUrl url_;
};

}  // namespace hopbench
