// Acceptance checks: one PASS/FAIL line per release criterion.

#include "support.hpp"

#include "malscan/bundled_corpus.hpp"
#include "malscan/eval.hpp"
#include "malscan/model_backend.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <thread>

using namespace malscan;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 2) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

const RuleSet &rules() {
  static const auto r = testsupport::bundled_rules();
  return r;
}

RuleBackend &rule_backend() {
  static RuleBackend b(rules(), assets::prompt_templates());
  return b;
}

const fs::path &corpus_root() {
  static testsupport::TempDir dir;
  static const bool built = (build_bundled_corpus(dir.path()), true);
  (void)built;
  return dir.path();
}

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun cli(const std::vector<std::string> &args) {
  std::string cmd = "'" MALSCAN_CLI "'";
  for (const auto &a : args)
    cmd += " '" + a + "'";
  cmd += " 2>/dev/null";
  CliRun r;
  FILE *pipe = ::popen(cmd.c_str(), "r");
  if (!pipe)
    return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0)
    r.out.append(buf, n);
  int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// ---------------------------------------------------------------------------

Outcome cvss_equivalence() {
  std::map<std::string, int> reference;
  std::istringstream in(testsupport::read_text(MALSCAN_TEST_DATA "/cvss31_reference_scores.tsv"));
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#')
      continue;
    auto tab = line.find('\t');
    reference[line.substr(0, tab)] =
        static_cast<int>(std::lround(std::stod(line.substr(tab + 1)) * 10));
  }
  auto t0 = Clock::now();
  std::size_t matched = 0, total = 0;
  for (const auto &v : cvss::all_vectors()) {
    ++total;
    auto it = reference.find(cvss::render(v));
    if (it != reference.end() && it->second == cvss::base_score(v).tenths())
      ++matched;
  }
  double secs = seconds_since(t0);
  bool ok = total == 2592 && reference.size() == 2592 && matched == total && secs < 5.0;
  return {ok, std::to_string(matched) + "/" + std::to_string(total) + " vectors match the reference in " +
                  fmt(secs, 3) + " s"};
}

Outcome cvss_spot_values() {
  auto score = [](const char *v) { return cvss::base_score(cvss::parse_vector(v)).str(); };
  auto a = score("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H");
  auto b = score("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:C/C:H/I:H/A:H");
  auto c = score("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:N");
  return {a == "9.8" && b == "10.0" && c == "0.0", "scope unchanged " + a + ", scope changed " + b +
                                                       ", no impact " + c};
}

Outcome componentizer_properties() {
  std::map<LanguageId, int> per_language;
  std::size_t files = 0, components = 0;
  std::vector<std::string> problems;
  for (const auto &e : fs::recursive_directory_iterator(MALSCAN_FIXTURES)) {
    if (!e.is_regular_file())
      continue;
    auto rel = fs::relative(e.path(), MALSCAN_FIXTURES).generic_string();
    auto file = load_source_file(e.path(), rel);
    ++per_language[file.language];
    ++files;
    auto comps = decompose(file);
    auto again = decompose(load_source_file(e.path(), rel));
    components += comps.size();
    std::map<std::string, const CodeComponent *> by_id;
    for (const auto &c : comps)
      by_id[c.id] = &c;
    std::map<std::string, std::vector<ByteSpan>> groups;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const auto &c = comps[i];
      if (c.source != file.content.substr(c.span.start, c.span.size()))
        problems.push_back(rel + ": slice mismatch for " + c.name);
      if (i >= again.size() || again[i].id != c.id || c.id != component_id(rel, c.span, c.kind))
        problems.push_back(rel + ": unstable id for " + c.name);
      if (c.parent_id) {
        auto p = by_id.find(*c.parent_id);
        if (p == by_id.end() || c.span.start < p->second->span.start || c.span.end > p->second->span.end)
          problems.push_back(rel + ": " + c.name + " escapes its parent");
      }
      groups[c.parent_id.value_or("")].push_back(c.span);
    }
    if (by_id.size() != comps.size())
      problems.push_back(rel + ": duplicate ids");
    for (auto &[parent, spans] : groups) {
      std::sort(spans.begin(), spans.end(), [](ByteSpan a, ByteSpan b) { return a.start < b.start; });
      for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i - 1].end > spans[i].start)
          problems.push_back(rel + ": overlapping siblings");
    }
  }
  int fewest = 1 << 30;
  for (auto id : kRegisteredLanguages)
    fewest = std::min(fewest, per_language[id]);
  bool ok = problems.empty() && fewest >= 3;
  std::string detail = std::to_string(files) + " fixtures, " + std::to_string(components) +
                       " components, " + std::to_string(kRegisteredLanguages.size()) +
                       " languages with >= " + std::to_string(fewest) + " fixtures each";
  if (!problems.empty())
    detail += "; first problem: " + problems.front();
  return {ok, detail};
}

Outcome fallback_totality() {
  std::mt19937_64 rng(0x5eed);
  std::size_t cases = 0, failures = 0;
  for (int i = 0; i < 1200; ++i) {
    std::string bytes(std::uniform_int_distribution<std::size_t>(0, 4096)(rng), '\0');
    for (auto &b : bytes)
      b = static_cast<char>(std::uniform_int_distribution<int>(0, 255)(rng));
    auto max_bytes = std::uniform_int_distribution<std::size_t>(1, 512)(rng);
    SourceFile file;
    file.path = "blob.bin";
    file.content = bytes;
    std::string joined;
    bool ok = true;
    for (const auto &f : fallback_fragment(file, max_bytes)) {
      ok = ok && f.source.size() <= max_bytes && !f.source.empty();
      joined += f.source;
    }
    ok = ok && joined == bytes;
    failures += ok ? 0 : 1;
    ++cases;
  }
  return {failures == 0 && cases >= 1000,
          std::to_string(cases) + " random byte cases, " + std::to_string(failures) + " failures"};
}

Outcome routing_soundness() {
  std::mt19937 rng(424242);
  const std::vector<std::string> lines = {
      "eval(data)", "os.system(\"ls \" + d)", "pickle.loads(data)", "token = \"s3cr3t-value\"",
      "username = \"admin\"", "cur.execute(\"DELETE FROM t WHERE id = \" + d)", "x = 1",
      "return data", "print(d)"};
  std::size_t cases = 0, routed = 0, violations = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    for (int fn = 0; fn < 3; ++fn) {
      text += "def f" + std::to_string(fn) + "(data, d):\n";
      for (int k = 1 + static_cast<int>(rng() % 3); k > 0; --k)
        text += "    " + lines[rng() % lines.size()] + "\n";
      text += "\n";
    }
    ScanConfig cfg;
    cfg.flag_threshold = static_cast<double>(rng() % 101) / 10.0;
    cfg.max_parallel = 1 + rng() % 4;
    testsupport::RecordingBackend rec(rule_backend());
    auto outcomes = scan_file(testsupport::source("p.py", text), cfg, rules(), rec);
    auto seen = rec.analyzed_ids();
    std::set<std::string> reached(seen.begin(), seen.end());
    for (const auto &o : outcomes) {
      ++cases;
      bool below = o.prescore.score.tenths() < threshold_tenths(cfg.flag_threshold);
      if (below && reached.count(o.component.id))
        ++violations;
      if (!below)
        ++routed;
    }
  }
  return {violations == 0, std::to_string(cases) + " components over 500 random scans, " +
                               std::to_string(routed) + " routed, " + std::to_string(violations) +
                               " below-threshold components reached the backend"};
}

Outcome determinism() {
  std::set<std::string> outputs;
  std::size_t runs = 0;
  for (const char *parallel : {"1", "4"})
    for (int i = 0; i < 3; ++i) {
      auto r = cli({"scan", corpus_root().string(), "--backend", "rules", "--fixed-timestamps",
                    "--max-parallel", parallel});
      if (r.out.empty())
        return {false, "scan produced no output"};
      outputs.insert(r.out);
      ++runs;
    }
  return {outputs.size() == 1, std::to_string(runs) + " runs (max_parallel 1 and 4), " +
                                   std::to_string(outputs.size()) + " distinct report(s)"};
}

Outcome corpus_recall() {
  auto t0 = Clock::now();
  auto result = evaluate_corpus(corpus_root(), ScanConfig{}, rules(), rule_backend());
  double secs = seconds_since(t0);
  std::size_t insecure_tp = 0, insecure_n = 0, mixed_tp = 0, mixed_n = 0, secure_fp = 0;
  for (const auto &p : result.projects) {
    if (p.profile == SecurityProfile::insecure) {
      insecure_tp += p.true_positives;
      insecure_n += p.entries;
    } else if (p.profile == SecurityProfile::mixed) {
      mixed_tp += p.true_positives;
      mixed_n += p.entries;
    } else {
      secure_fp += p.false_positives;
    }
  }
  bool ok = insecure_n == 11 && mixed_n == 6 && insecure_tp >= 8 && mixed_tp >= 5 && secure_fp <= 1 &&
            secs < 30.0;
  return {ok, "insecure " + std::to_string(insecure_tp) + "/" + std::to_string(insecure_n) + ", mixed " +
                  std::to_string(mixed_tp) + "/" + std::to_string(mixed_n) + ", secure FP " +
                  std::to_string(secure_fp) + ", " + fmt(secs) + " s"};
}

/// OpenAI-style stub that recomputes the prompt estimate of every request
/// and counts those above the budget.
class BudgetStub {
public:
  explicit BudgetStub(std::size_t budget) : budget_(budget) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request &req, httplib::Response &res) {
      auto body = json::parse(req.body);
      std::size_t estimate = 0;
      std::string last;
      for (const auto &m : body["messages"]) {
        last = m["content"].get<std::string>();
        estimate += estimate_tokens(last);
      }
      ++requests_;
      if (estimate > budget_)
        ++over_;
      std::size_t seen = largest_.load();
      while (estimate > seen && !largest_.compare_exchange_weak(seen, estimate)) {
      }
      json content = last.find("urn:malscan:analysis-response") != std::string::npos
                         ? json{{"findings", json::array()}}
                         : json{{"summary", "Stub summary."}};
      json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content.dump()}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~BudgetStub() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  std::size_t requests() const { return requests_; }
  std::size_t over() const { return over_; }
  std::size_t largest() const { return largest_; }

private:
  std::size_t budget_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0}, over_{0}, largest_{0};
};

Outcome budget_safety() {
  constexpr std::size_t kBudget = 3072;
  testsupport::TempDir tree;
  fs::copy(corpus_root(), tree.path(), fs::copy_options::recursive);
  std::string big = "def oversized(expr):\n";
  for (int i = 0; i < 800; ++i)
    big += "    value_" + std::to_string(i) + " = transform(expr, " + std::to_string(i) + ")\n";
  big += "    return eval(expr)\n";
  testsupport::write_text(tree / "oversized.py", big);

  ScanConfig cfg;
  cfg.token_budget = kBudget;
  cfg.force_analyze_all = true;
  cfg.full_report = true;

  BudgetStub stub(kBudget);
  ModelConfig mc;
  mc.endpoint = stub.url();
  mc.model = "budget-stub";
  mc.timeout_seconds = 10;
  ModelBackend model(mc, assets::prompt_templates());
  auto model_report = scan_tree(tree.path(), cfg, rules(), model);

  testsupport::RecordingBackend rec(rule_backend());
  scan_tree(tree.path(), cfg, rules(), rec);

  bool ok = stub.over() == 0 && rec.over_budget() == 0 && stub.requests() > 0 &&
            model_report.totals.degraded == 0;
  return {ok, "token_budget " + std::to_string(kBudget) + ": model stub saw " +
                  std::to_string(stub.requests()) + " requests (largest ~" + std::to_string(stub.largest()) +
                  " tokens, " + std::to_string(stub.over()) + " over), rule backend " +
                  std::to_string(rec.dispatched()) + " requests (" + std::to_string(rec.over_budget()) +
                  " over)"};
}

Outcome report_schema_check() {
  std::size_t reports = 0;
  std::vector<std::string> problems;
  auto check = [&](const std::string &name, const std::string &text) {
    ++reports;
    auto j = json::parse(text);
    auto errs = report_schema().validate(j);
    if (!errs.empty())
      problems.push_back(name + ": " + errs.front());
    try {
      auto r = report_from_json(text);
      if (compute_totals(r) != r.totals || to_json(r) != text)
        problems.push_back(name + ": not a fixed point");
    } catch (const std::exception &e) {
      problems.push_back(name + ": " + e.what());
    }
  };
  ScanConfig cfg;
  cfg.fixed_timestamps = true;
  for (const auto &dir : fs::directory_iterator(corpus_root()))
    check(dir.path().filename().string(), to_json(scan_tree(dir.path(), cfg, rules(), rule_backend())));
  testsupport::FailingBackend failing;
  check("degraded", to_json(scan_tree(corpus_root(), cfg, rules(), failing)));
  auto full = cfg;
  full.full_report = true;
  check("full", to_json(scan_tree(corpus_root(), full, rules(), rule_backend())));

  const fs::path golden = fs::path(MALSCAN_TEST_DATA) / "golden";
  auto g = scan_tree(golden / "src", cfg, rules(), rule_backend());
  bool golden_ok = to_json(g) == testsupport::read_text(golden / "report.json") &&
                   to_markdown(g) == testsupport::read_text(golden / "report.md") &&
                   to_markdown(report_from_json(testsupport::read_text(golden / "report.json"))) ==
                       testsupport::read_text(golden / "report.md");
  check("golden", testsupport::read_text(golden / "report.json"));
  if (!golden_ok)
    problems.push_back("golden JSON/Markdown pair changed");
  std::string detail = std::to_string(reports) + " reports validated, totals recomputed, golden pair " +
                       (golden_ok ? "stable" : "changed");
  if (!problems.empty())
    detail += "; " + problems.front();
  return {problems.empty(), detail};
}

Outcome exit_codes() {
  testsupport::TempDir dir;
  testsupport::write_text(dir / "bad/app.py", "import os\n\ndef run(cmd):\n    os.system(cmd)\n");
  testsupport::write_text(dir / "clean/app.py", "def add(a, b):\n    return a + b\n");
  auto top = report_from_json(cli({"scan", (dir / "bad").string()}).out);
  cvss::Score best;
  for (const auto &f : top.files)
    for (const auto &o : f.components)
      if (o.detection)
        for (const auto &fd : o.detection->findings)
          best = std::max(best, fd.score);
  auto at = best.str();
  auto above = cvss::Score::from_tenths(best.tenths() + 1).str();
  std::vector<std::pair<std::string, int>> got = {
      {"clean", cli({"scan", (dir / "clean").string()}).code},
      {"finding>=7.0", cli({"scan", (dir / "bad").string(), "--fail-threshold", "7.0"}).code},
      {"threshold==" + at, cli({"scan", (dir / "bad").string(), "--fail-threshold", at}).code},
      {"threshold==" + above, cli({"scan", (dir / "bad").string(), "--fail-threshold", above}).code},
      {"missing root", cli({"scan", (dir / "nothing").string()}).code},
      {"bad flag", cli({"scan", (dir / "bad").string(), "--threshold", "12"}).code},
  };
  auto with_error = top;
  with_error.errors.push_back({"x.py", "cannot read file: x.py"});
  got.push_back({"scan error", exit_code(with_error, 7.0)});
  const std::vector<int> want = {0, 1, 1, 0, 2, 2, 2};
  bool ok = best.tenths() > 0 && best.tenths() < 100;
  std::string detail;
  for (std::size_t i = 0; i < got.size(); ++i) {
    ok = ok && got[i].second == want[i];
    detail += (i ? ", " : "") + got[i].first + " -> " + std::to_string(got[i].second);
  }
  return {ok, detail};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"cvss-equivalence", cvss_equivalence},
      {"cvss-spot-values", cvss_spot_values},
      {"componentizer-properties", componentizer_properties},
      {"fallback-totality", fallback_totality},
      {"routing-soundness", routing_soundness},
      {"determinism", determinism},
      {"corpus-recall", corpus_recall},
      {"budget-safety", budget_safety},
      {"report-schema", report_schema_check},
      {"exit-codes", exit_codes},
  };
  int failed = 0;
  for (const auto &[name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception &e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
