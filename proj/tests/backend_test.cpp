#include "support.hpp"

#include "malscan/model_backend.hpp"

#include <gtest/gtest.h>

#include <deque>
#include <thread>

using namespace malscan;

namespace {

const RuleSet &rules() {
  static const auto r = testsupport::bundled_rules();
  return r;
}

BackendRequest request_for(const std::string &path, const std::string &text, Task task = Task::analyze,
                           std::size_t pick = SIZE_MAX) {
  auto file = testsupport::source(path, text);
  auto comps = decompose(file);
  BackendRequest req;
  req.task = task;
  req.component = pick == SIZE_MAX ? comps.back() : comps.at(pick);
  req.language = file.language;
  req.indicators = prescore(req.component, rules(), 4.0, detail::child_spans(comps, req.component)).indicators;
  return req;
}

const char *kVulnerablePython =
    "import os\n"
    "\n"
    "def lookup(cur, uid, host):\n"
    "    cur.execute(\"SELECT * FROM users WHERE id = \" + uid)\n"
    "    os.system(\"ping -c 1 \" + host)\n"
    "    return cur.fetchone()\n";

} // namespace

TEST(RuleBackend, FindingsSatisfyInvariants) {
  RuleBackend backend(rules(), assets::prompt_templates());
  auto req = request_for("svc.py", kVulnerablePython);
  ASSERT_FALSE(req.indicators.empty());
  auto report = backend.analyze(req);
  EXPECT_EQ(report.component_id, req.component.id);
  EXPECT_EQ(report.backend_id, "rules");
  ASSERT_EQ(report.findings.size(), 2u);
  for (const auto &f : report.findings) {
    EXPECT_EQ(check_finding(f), "") << f.title;
    EXPECT_EQ(f.score, cvss::base_score(f.severity_vector));
  }
  EXPECT_GE(report.findings[0].score, report.findings[1].score);
  auto reparsed = detection_from_json(to_json(report));
  EXPECT_EQ(reparsed, report);
}

TEST(RuleBackend, TaintedParameterNamesTheEntryPoint) {
  RuleBackend backend(rules(), assets::prompt_templates());
  auto report = backend.analyze(request_for("svc.py", kVulnerablePython));
  std::map<VulnCategory, std::string> entry;
  for (const auto &f : report.findings)
    entry[f.category] = f.exploit_trace.entry_point;
  EXPECT_NE(entry[VulnCategory::sql_injection].find("`uid`"), std::string::npos)
      << entry[VulnCategory::sql_injection];
  EXPECT_NE(entry[VulnCategory::command_injection].find("`host`"), std::string::npos)
      << entry[VulnCategory::command_injection];
  EXPECT_EQ(entry[VulnCategory::sql_injection].find("`cur`"), std::string::npos);
}

TEST(RuleBackend, MethodReceiverIsNotTheTaintedValue) {
  EXPECT_FALSE(detail::mentions_as_value("  db.query(sql)", "db"));
  EXPECT_TRUE(detail::mentions_as_value("  db.query(sql)", "sql"));
  EXPECT_TRUE(detail::mentions_as_value("  run(db, x)", "db"));
  EXPECT_FALSE(detail::mentions_as_value("  dbx = 1", "db"));
}

TEST(RuleBackend, NoIndicatorsNoFindings) {
  RuleBackend backend(rules(), assets::prompt_templates());
  auto report = backend.analyze(request_for("a.py", "def add(a, b):\n    return a + b\n"));
  EXPECT_TRUE(report.findings.empty());
}

TEST(RuleBackend, IsDeterministic) {
  RuleBackend a(rules(), assets::prompt_templates());
  RuleBackend b(rules(), assets::prompt_templates());
  auto req = request_for("svc.py", kVulnerablePython);
  EXPECT_EQ(a.analyze(req), b.analyze(req));
  req.task = Task::summarize;
  EXPECT_EQ(a.summarize(req), b.summarize(req));
}

TEST(RuleBackend, SummariesDescribeTheComponent) {
  RuleBackend backend(rules(), assets::prompt_templates());
  auto fn = backend.summarize(request_for("svc.py", kVulnerablePython, Task::summarize));
  EXPECT_NE(fn.find("`lookup`"), std::string::npos) << fn;
  EXPECT_NE(fn.find("cur, uid, host"), std::string::npos) << fn;
  EXPECT_NE(fn.find("returns a value"), std::string::npos) << fn;

  auto cls = backend.summarize(request_for(
      "m.py", "class Cart:\n    def add(self, x):\n        pass\n\n    def total(self):\n        return 0\n",
      Task::summarize, 0));
  EXPECT_NE(cls.find("Class `Cart`"), std::string::npos) << cls;
  EXPECT_NE(cls.find("add, total"), std::string::npos) << cls;
}

TEST(RuleBackend, BlankSourceNeedsNoBudget) {
  RuleBackend backend(rules(), assets::prompt_templates());
  auto file = testsupport::source("a.bin", "   \n\n");
  BackendRequest req;
  req.task = Task::summarize;
  req.component = fallback_fragment(file, 16).at(0);
  req.token_budget = 1;
  EXPECT_FALSE(backend.summarize(req).empty());
  req.task = Task::analyze;
  EXPECT_TRUE(backend.analyze(req).findings.empty());
}

TEST(RuleBackend, OverBudgetRequestsAreRefused) {
  RuleBackend backend(rules(), assets::prompt_templates());
  auto req = request_for("svc.py", kVulnerablePython);
  auto need = backend.estimate_request_tokens(req);
  req.token_budget = need - 1;
  try {
    backend.analyze(req);
    FAIL() << "no BudgetExceeded";
  } catch (const BudgetExceeded &e) {
    EXPECT_EQ(e.estimated(), need);
    EXPECT_EQ(e.budget(), need - 1);
  }
  req.token_budget = need;
  EXPECT_NO_THROW(backend.analyze(req));
}

TEST(Prompts, RenderSubstitutesEveryPlaceholder) {
  auto templates = assets::prompt_templates();
  auto req = request_for("svc.py", kVulnerablePython);
  req.summary = "Looks up a user.";
  auto p = render_prompt(templates, req);
  EXPECT_EQ(p.system.find("{{"), std::string::npos);
  EXPECT_EQ(p.user.find("{{"), std::string::npos);
  EXPECT_NE(p.user.find(req.component.source), std::string::npos);
  EXPECT_NE(p.user.find("Looks up a user."), std::string::npos);
  EXPECT_NE(p.user.find("sqli-"), std::string::npos);
  EXPECT_EQ(p.estimated_tokens(), estimate_tokens(p.system) + estimate_tokens(p.user));
  req.task = Task::summarize;
  EXPECT_EQ(render_prompt(templates, req).user.find("{{"), std::string::npos);
}

TEST(Prompts, TemplateVersionTracksContent) {
  auto t = assets::prompt_templates();
  auto v = t.version();
  EXPECT_EQ(v.size(), 10u);
  EXPECT_EQ(v.substr(0, 2), "1.");
  t.analyze += " ";
  EXPECT_NE(t.version(), v);
}

TEST(Prompts, TokenEstimateRoundsUp) {
  EXPECT_EQ(estimate_tokens(""), 0u);
  EXPECT_EQ(estimate_tokens("a"), 1u);
  EXPECT_EQ(estimate_tokens("abc"), 1u);
  EXPECT_EQ(estimate_tokens("abcd"), 2u);
}

TEST(Findings, JsonRejectsInconsistentScore) {
  RuleBackend backend(rules(), assets::prompt_templates());
  auto f = backend.analyze(request_for("svc.py", kVulnerablePython)).findings.at(0);
  auto j = to_json(f);
  EXPECT_EQ(finding_from_json(j), f);
  j["score"] = 1.0;
  EXPECT_THROW(finding_from_json(j), Error);
  j = to_json(f);
  j["exploit_trace"]["steps"] = json::array();
  EXPECT_EQ(check_finding(finding_from_json(j)), "exploit_trace.steps is empty");
}

// ---------------------------------------------------------------------------
// Model backend against a local stub server

namespace {

json valid_analysis() {
  return {{"findings",
           {{{"category", "sql_injection"},
             {"title", "SQL built from request input"},
             {"explanation", "uid is concatenated into the query."},
             {"cvss_vector", "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H"},
             {"confidence", "high"},
             {"exploit_trace",
              {{"entry_point", "uid"}, {"steps", {"uid reaches cur.execute"}}, {"impact", "Database read"}}},
             {"remediation",
              {{"recommendation", "Use a bound parameter."},
               {"patched_snippet", "cur.execute(\"... = ?\", (uid,))"},
               {"preserves_functionality_note", "Same rows are returned."}}}}}}};
}

json envelope(const std::string &content) {
  return {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
}

/// Serves queued replies on 127.0.0.1 and records request bodies.
class StubServer {
public:
  StubServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request &req, httplib::Response &res) {
      std::lock_guard lock(mu_);
      requests_.push_back(json::parse(req.body));
      if (replies_.empty()) {
        res.status = 500;
        return;
      }
      auto [status, body] = replies_.front();
      replies_.pop_front();
      res.status = status;
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  void reply(const std::string &content) { push(200, envelope(content).dump()); }
  void push(int status, std::string body) {
    std::lock_guard lock(mu_);
    replies_.emplace_back(status, std::move(body));
  }
  std::vector<json> requests() {
    std::lock_guard lock(mu_);
    return requests_;
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::deque<std::pair<int, std::string>> replies_;
  std::vector<json> requests_;
};

ModelBackend model_for(const std::string &url) {
  ModelConfig cfg;
  cfg.endpoint = url;
  cfg.model = "stub-model";
  cfg.timeout_seconds = 5;
  return ModelBackend(cfg, assets::prompt_templates());
}

} // namespace

TEST(ModelBackend, ParsesAValidReply) {
  StubServer stub;
  const std::string content = "Here you go:\n```json\n" + valid_analysis().dump(2) + "\n```\n";
  stub.reply(content);
  auto backend = model_for(stub.url());
  EXPECT_EQ(backend.id(), "model:stub-model");
  auto req = request_for("svc.py", kVulnerablePython);
  auto report = backend.analyze(req);
  ASSERT_EQ(report.findings.size(), 1u);
  EXPECT_EQ(report.findings[0].score.str(), "9.8");
  EXPECT_EQ(report.component_id, req.component.id);
  EXPECT_EQ(report.raw_response_digest, digest_of(content));

  auto sent = stub.requests();
  ASSERT_EQ(sent.size(), 1u);
  EXPECT_EQ(sent[0]["model"], "stub-model");
  EXPECT_EQ(sent[0]["temperature"], 0.0);
  ASSERT_EQ(sent[0]["messages"].size(), 2u);
  EXPECT_EQ(sent[0]["messages"][0]["role"], "system");
  auto prompt = render_prompt(assets::prompt_templates(), req);
  EXPECT_EQ(sent[0]["messages"][1]["content"], prompt.user);
}

TEST(ModelBackend, RepairsOnceThenSucceeds) {
  StubServer stub;
  auto broken = valid_analysis();
  broken["findings"][0]["cvss_vector"] = "CVSS:3.1/AV:Z";
  stub.reply(broken.dump());
  stub.reply(valid_analysis().dump());
  auto backend = model_for(stub.url());
  auto report = backend.analyze(request_for("svc.py", kVulnerablePython));
  EXPECT_EQ(report.findings.size(), 1u);
  auto sent = stub.requests();
  ASSERT_EQ(sent.size(), 2u);
  ASSERT_EQ(sent[1]["messages"].size(), 4u);
  EXPECT_EQ(sent[1]["messages"][2]["role"], "assistant");
  EXPECT_NE(sent[1]["messages"][3]["content"].get<std::string>().find("cvss_vector"), std::string::npos);
}

TEST(ModelBackend, SecondInvalidReplyIsMalformed) {
  StubServer stub;
  stub.reply("not json at all");
  stub.reply("{\"findings\": [{\"category\": \"nonsense\"}]}");
  auto backend = model_for(stub.url());
  EXPECT_THROW(backend.analyze(request_for("svc.py", kVulnerablePython)), MalformedResponse);
  EXPECT_EQ(stub.requests().size(), 2u);
}

TEST(ModelBackend, BlankTraceIsRejected) {
  StubServer stub;
  auto blank = valid_analysis();
  blank["findings"][0]["exploit_trace"]["impact"] = "   ";
  stub.reply(blank.dump());
  stub.reply(blank.dump());
  auto backend = model_for(stub.url());
  EXPECT_THROW(backend.analyze(request_for("svc.py", kVulnerablePython)), MalformedResponse);
}

TEST(ModelBackend, SummaryReply) {
  StubServer stub;
  stub.reply("{\"summary\": \"Looks up a user and pings a host.\"}");
  auto backend = model_for(stub.url());
  EXPECT_EQ(backend.summarize(request_for("svc.py", kVulnerablePython, Task::summarize)),
            "Looks up a user and pings a host.");
}

TEST(ModelBackend, HttpErrorIsUnavailable) {
  StubServer stub;
  stub.push(503, "{}");
  auto backend = model_for(stub.url());
  EXPECT_THROW(backend.analyze(request_for("svc.py", kVulnerablePython)), BackendUnavailable);
}

TEST(ModelBackend, UnreachableEndpointIsUnavailable) {
  auto backend = model_for("http://127.0.0.1:1/v1/chat/completions");
  EXPECT_THROW(backend.analyze(request_for("svc.py", kVulnerablePython)), BackendUnavailable);
}

TEST(ModelBackend, BudgetIsCheckedBeforeSending) {
  StubServer stub;
  auto backend = model_for(stub.url());
  auto req = request_for("svc.py", kVulnerablePython);
  req.token_budget = backend.estimate_request_tokens(req) - 1;
  EXPECT_THROW(backend.analyze(req), BudgetExceeded);
  EXPECT_TRUE(stub.requests().empty());
}

TEST(ModelBackend, RequiresAbsoluteEndpointAndModel) {
  EXPECT_THROW(model_for("localhost:8080"), Error);
  ModelConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/x";
  EXPECT_THROW(ModelBackend(cfg, assets::prompt_templates()), Error);
}
