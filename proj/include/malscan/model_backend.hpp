#pragma once

#include "malscan/backend.hpp"
#include "malscan/json_schema.hpp"

#include <httplib.h>

#include <cstdlib>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

namespace malscan {

struct ModelConfig {
  /// Chat-completions URL, e.g. "http://127.0.0.1:8080/v1/chat/completions".
  std::string endpoint;
  std::string model;
  std::string api_key_env = "MALSCAN_API_KEY";
  double timeout_seconds = 120.0;
  std::size_t max_concurrent = 4;
};

struct Endpoint {
  std::string origin; ///< scheme://host[:port]
  std::string path;
};

inline Endpoint split_endpoint(const std::string &url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos || scheme == 0)
    throw Error("model endpoint must be an absolute http(s) URL: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos)
    return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

/// Pulls the JSON object out of a model reply: drops Markdown fences and
/// any prose around the outermost braces.
inline json extract_json_object(const std::string &content) {
  auto open = content.find('{');
  auto close = content.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw Error("reply contains no JSON object");
  try {
    return json::parse(content.substr(open, close - open + 1));
  } catch (const json::parse_error &e) {
    throw Error(std::string("reply is not valid JSON: ") + e.what());
  }
}

/// Client for an OpenAI-compatible chat-completions endpoint. Requests use
/// temperature 0; replies that fail validation get one repair round.
class ModelBackend : public Backend {
public:
  ModelBackend(ModelConfig config, PromptTemplates templates)
      : config_(std::move(config)), templates_(std::move(templates)),
        endpoint_(split_endpoint(config_.endpoint)),
        response_schema_(JsonSchema::parse(templates_.response_schema)),
        slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_concurrent))) {
    if (config_.model.empty())
      throw Error("model name is required for the model backend");
    if (const char *key = std::getenv(config_.api_key_env.c_str()))
      api_key_ = key;
  }

  [[nodiscard]] std::string id() const override { return "model:" + config_.model; }
  [[nodiscard]] std::string template_version() const override {
    return templates_.version();
  }
  [[nodiscard]] std::size_t estimate_request_tokens(const BackendRequest &req) const override {
    return render_prompt(templates_, req).estimated_tokens();
  }

  std::string summarize(const BackendRequest &req) override {
    auto reply = converse(req, [](const json &obj) -> std::string {
      if (!obj.is_object() || !obj.contains("summary") || !obj["summary"].is_string())
        return "expected an object with a string field \"summary\"";
      if (is_blank(obj["summary"].get<std::string>()))
        return "summary is blank";
      return {};
    });
    return reply.object["summary"].get<std::string>();
  }

  DetectionReport analyze(const BackendRequest &req) override {
    auto reply = converse(req, [this](const json &obj) -> std::string {
      auto errors = response_schema_.validate(obj);
      if (!errors.empty())
        return "schema violation at " + errors.front();
      try {
        for (const auto &f : obj.at("findings")) {
          auto why = check_finding(finding_from_json(f));
          if (!why.empty())
            return why;
        }
      } catch (const std::exception &e) {
        return e.what();
      }
      return {};
    });
    DetectionReport report;
    report.component_id = req.component.id;
    report.backend_id = id();
    report.summary = req.summary.value_or("");
    for (const auto &f : reply.object.at("findings"))
      report.findings.push_back(finding_from_json(f));
    sort_findings(report.findings);
    report.raw_response_digest = digest_of(reply.raw);
    return report;
  }

private:
  struct Reply {
    std::string raw;
    json object;
  };

  template <typename Check>
  Reply converse(const BackendRequest &req, Check check) {
    auto prompt = render_prompt(templates_, req);
    auto estimated = prompt.estimated_tokens();
    if (estimated > req.token_budget)
      throw BudgetExceeded(estimated, req.token_budget);

    json messages = json::array({
        {{"role", "system"}, {"content", prompt.system}},
        {{"role", "user"}, {"content", prompt.user}},
    });
    std::string raw = post(messages);
    std::string problem;
    try {
      auto obj = extract_json_object(raw);
      problem = check(obj);
      if (problem.empty())
        return {raw, std::move(obj)};
    } catch (const Error &e) {
      problem = e.what();
    }

    auto repair = fill_template(templates_.repair, {{"error", problem}});
    if (estimated + estimate_tokens(raw) + estimate_tokens(repair) > req.token_budget)
      throw MalformedResponse(problem + " (repair round would exceed the token budget)");
    messages.push_back({{"role", "assistant"}, {"content", raw}});
    messages.push_back({{"role", "user"}, {"content", repair}});
    raw = post(messages);
    try {
      auto obj = extract_json_object(raw);
      problem = check(obj);
      if (problem.empty())
        return {raw, std::move(obj)};
    } catch (const Error &e) {
      problem = e.what();
    }
    throw MalformedResponse(problem);
  }

  std::string post(const json &messages) {
    json body = {{"model", config_.model}, {"temperature", 0.0}, {"messages", messages}};

    slots_.acquire();
    struct Release {
      std::counting_semaphore<> &s;
      ~Release() { s.release(); }
    } release{slots_};

    httplib::Client client(endpoint_.origin);
    auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
    auto as_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
    client.set_connection_timeout(as_us);
    client.set_read_timeout(as_us);
    client.set_write_timeout(as_us);
    httplib::Headers headers;
    if (!api_key_.empty())
      headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = client.Post(endpoint_.path, headers, body.dump(), "application/json");
    if (!res)
      throw BackendUnavailable(httplib::to_string(res.error()));
    if (res->status != 200)
      throw BackendUnavailable("HTTP " + std::to_string(res->status));
    try {
      auto reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception &e) {
      throw MalformedResponse(std::string("unexpected reply envelope: ") + e.what());
    }
  }

  ModelConfig config_;
  PromptTemplates templates_;
  Endpoint endpoint_;
  JsonSchema response_schema_;
  std::counting_semaphore<> slots_;
  std::string api_key_;
};

} // namespace malscan
