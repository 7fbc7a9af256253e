#include "support.hpp"

#include "malscan/bundled_corpus.hpp"
#include "malscan/config.hpp"
#include "malscan/eval.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <random>
#include <set>

using namespace malscan;
namespace fs = std::filesystem;

namespace {

const RuleSet &rules() {
  static const auto r = testsupport::bundled_rules();
  return r;
}

const EvalResult &corpus_eval() {
  static const EvalResult r = [] {
    RuleBackend backend(rules(), assets::prompt_templates());
    return evaluate_corpus(fs::path(MALSCAN_SOURCE_DIR) / "corpus", ScanConfig{}, rules(), backend);
  }();
  return r;
}

const ProjectResult &project(const std::string &id) {
  for (const auto &p : corpus_eval().projects)
    if (p.project_id == id)
      return p;
  throw std::logic_error("no project " + id);
}

} // namespace

TEST(Config, EmptyDocumentKeepsDefaults) {
  auto cfg = parse_config("");
  EXPECT_EQ(cfg.scan.flag_threshold, 4.0);
  EXPECT_EQ(cfg.scan.token_budget, 3072u);
  EXPECT_EQ(cfg.scan.backend_id, "rules");
  EXPECT_EQ(cfg.scan.fail_threshold, 7.0);
}

TEST(Config, ReadsEveryKey) {
  auto cfg = parse_config(R"(flag_threshold: 5.5
fail_threshold: 9.0
token_budget: 4096
max_parallel: 2
backend: model
force_analyze_all: true
full_report: true
rules: custom.yaml
include: ["*.py"]
exclude: [vendor, "**/gen"]
fragment_bytes: 1024
cache_dir: .cache
model:
  endpoint: http://127.0.0.1:9000/v1/chat/completions
  name: local
  api_key_env: KEY
  timeout_seconds: 30
  max_concurrent: 1
)");
  EXPECT_EQ(cfg.scan.flag_threshold, 5.5);
  EXPECT_EQ(cfg.scan.fail_threshold, 9.0);
  EXPECT_EQ(cfg.scan.token_budget, 4096u);
  EXPECT_EQ(cfg.scan.max_parallel, 2u);
  EXPECT_EQ(cfg.scan.backend_id, "model");
  EXPECT_TRUE(cfg.scan.force_analyze_all);
  EXPECT_TRUE(cfg.scan.full_report);
  EXPECT_EQ(cfg.scan.rule_set_path, "custom.yaml");
  EXPECT_EQ(cfg.scan.include, std::vector<std::string>{"*.py"});
  EXPECT_EQ(cfg.scan.exclude, (std::vector<std::string>{"vendor", "**/gen"}));
  EXPECT_EQ(cfg.scan.fragment_bytes, 1024u);
  EXPECT_EQ(cfg.scan.cache_dir, ".cache");
  EXPECT_EQ(cfg.model.endpoint, "http://127.0.0.1:9000/v1/chat/completions");
  EXPECT_EQ(cfg.model.model, "local");
  EXPECT_EQ(cfg.model.api_key_env, "KEY");
  EXPECT_EQ(cfg.model.timeout_seconds, 30.0);
  EXPECT_EQ(cfg.model.max_concurrent, 1u);
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
  auto message = [](const std::string &text) {
    try {
      parse_config(text);
    } catch (const ConfigError &e) {
      return std::string(e.what());
    }
    return std::string("(accepted)");
  };
  EXPECT_NE(message("threshold: 4\n").find("line 1: unknown key 'threshold'"), std::string::npos);
  EXPECT_NE(message("backend: rules\nmodel:\n  temperature: 1\n").find("line 3: unknown key 'model.temperature'"),
            std::string::npos);
  EXPECT_NE(message("token_budget: lots\n").find("'token_budget' has the wrong type"), std::string::npos);
  EXPECT_NE(message("- a\n- b\n").find("must be a mapping"), std::string::npos);
  EXPECT_NE(message("a: [\n").find("not valid YAML"), std::string::npos);
}

TEST(Manifest, ParsesEntriesAndLabels) {
  auto m = parse_manifest(R"(project_id: demo
security_profile: mixed
entries:
  - id: one
    file: a.py
    lines: [3, 5]
    category: sql_injection
  - id: two
    file: b.py
    lines: 7
    category: backdoor
)",
                          "remediation:\n  one: specific\n  two: generic\n");
  EXPECT_EQ(m.project_id, "demo");
  EXPECT_EQ(m.profile, SecurityProfile::mixed);
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[0].line_start, 3u);
  EXPECT_EQ(m.entries[0].line_end, 5u);
  EXPECT_EQ(m.entries[1].line_start, 7u);
  EXPECT_EQ(m.entries[1].line_end, 7u);
  EXPECT_EQ(m.remediation_labels.at("one"), "specific");
}

TEST(Manifest, RejectsInconsistentContent) {
  EXPECT_THROW(parse_manifest("project_id: x\nsecurity_profile: risky\n"), ManifestMismatch);
  EXPECT_THROW(parse_manifest("project_id: x\nsecurity_profile: secure\nentries:\n"
                              "  - {id: a, file: a.py, lines: 1, category: backdoor}\n"),
               ManifestMismatch);
  EXPECT_THROW(parse_manifest("project_id: x\nsecurity_profile: mixed\nentries:\n"
                              "  - {id: a, file: a.py, lines: [5, 2], category: backdoor}\n"),
               ManifestMismatch);
  EXPECT_THROW(parse_manifest("project_id: x\nsecurity_profile: mixed\nentries:\n"
                              "  - {id: a, file: a.py, lines: 1, category: typo}\n"),
               ManifestMismatch);
  EXPECT_THROW(parse_manifest("project_id: x\nsecurity_profile: mixed\n", "remediation:\n  a: vague\n"),
               ManifestMismatch);
  EXPECT_THROW(parse_manifest("security_profile: mixed\n"), ManifestMismatch);
}

TEST(Matching, CountsAreConsistentOnRandomReports) {
  std::mt19937 rng(99);
  const std::vector<std::string> files = {"a.py", "b.py", "c.py"};
  for (int trial = 0; trial < 300; ++trial) {
    CorpusManifest m;
    m.project_id = "p";
    m.profile = SecurityProfile::mixed;
    std::size_t n_entries = rng() % 6;
    for (std::size_t i = 0; i < n_entries; ++i) {
      auto start = 1 + rng() % 40;
      m.entries.push_back({"e" + std::to_string(i), files[rng() % files.size()], start,
                           start + rng() % 5, kAllCategories[rng() % 3]});
    }
    ScanReport r;
    for (const auto &path : files) {
      FileSection f;
      f.path = path;
      std::size_t n_comp = rng() % 4;
      for (std::size_t k = 0; k < n_comp; ++k) {
        ComponentOutcome o;
        o.component.name = "c" + std::to_string(k);
        o.component.line_start = 1 + rng() % 40;
        o.component.line_end = o.component.line_start + rng() % 10;
        o.status = OutcomeStatus::analyzed;
        DetectionReport d;
        for (std::size_t j = rng() % 3; j > 0; --j) {
          Finding fd;
          fd.category = kAllCategories[rng() % 3];
          fd.score = cvss::Score::from_tenths(static_cast<int>(rng() % 101));
          d.findings.push_back(fd);
        }
        o.detection = d;
        f.components.push_back(o);
      }
      r.files.push_back(f);
    }
    auto res = match_findings(r, m);
    std::size_t findings = 0;
    for (const auto &f : r.files)
      for (const auto &o : f.components)
        findings += o.detection->findings.size();
    ASSERT_EQ(res.true_positives + res.false_negatives, m.entries.size());
    ASSERT_EQ(res.true_positives + res.false_positives, findings);
    std::set<std::string> ids;
    for (const auto &mt : res.matched)
      ASSERT_TRUE(ids.insert(mt.entry_id).second);
    for (const auto &mt : res.missed)
      ASSERT_TRUE(ids.insert(mt.entry_id).second);
    ASSERT_EQ(ids.size(), m.entries.size());
  }
}

TEST(Matching, EntriesMustNameScannedFiles) {
  CorpusManifest m;
  m.entries.push_back({"ghost", "missing.py", 1, 1, VulnCategory::backdoor});
  EXPECT_THROW(match_findings(ScanReport{}, m), ManifestMismatch);
}

TEST(Corpus, BundledCopyMatchesTheSourceTree) {
  testsupport::TempDir dir;
  EXPECT_EQ(build_bundled_corpus(dir.path()), 20u);
  const fs::path src = fs::path(MALSCAN_SOURCE_DIR) / "corpus";
  std::size_t compared = 0;
  for (const auto &e : fs::recursive_directory_iterator(src)) {
    if (!e.is_regular_file())
      continue;
    auto rel = fs::relative(e.path(), src);
    EXPECT_EQ(testsupport::read_text(dir.path() / rel), testsupport::read_text(e.path())) << rel;
    ++compared;
  }
  EXPECT_EQ(compared, 28u);
}

TEST(Corpus, ShapeMatchesItsDesign) {
  const fs::path src = fs::path(MALSCAN_SOURCE_DIR) / "corpus";
  std::map<SecurityProfile, std::size_t> entries, projects;
  std::set<LanguageId> languages;
  for (const auto &dir : fs::directory_iterator(src)) {
    auto m = load_manifest(dir.path());
    entries[m.profile] += m.entries.size();
    ++projects[m.profile];
    for (const auto &[id, label] : m.remediation_labels)
      EXPECT_TRUE(std::any_of(m.entries.begin(), m.entries.end(),
                              [&](const GroundTruth &g) { return g.id == id; }))
          << id;
    for (const auto &f : fs::recursive_directory_iterator(dir.path()))
      if (f.is_regular_file() && f.path().extension() != ".yaml")
        languages.insert(detect_language(f.path().string(), std::nullopt));
  }
  EXPECT_EQ(projects[SecurityProfile::secure], 1u);
  EXPECT_EQ(projects[SecurityProfile::insecure], 1u);
  EXPECT_EQ(projects[SecurityProfile::mixed], 2u);
  EXPECT_EQ(entries[SecurityProfile::insecure], 11u);
  EXPECT_EQ(entries[SecurityProfile::secure], 0u);
  EXPECT_EQ(entries[SecurityProfile::mixed], 6u);
  EXPECT_EQ(languages, (std::set<LanguageId>{LanguageId::python, LanguageId::java, LanguageId::c,
                                             LanguageId::javascript}));
}

TEST(Corpus, RuleBackendRecallMeetsTargets) {
  auto t0 = std::chrono::steady_clock::now();
  const auto &eval = corpus_eval();
  auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_LT(elapsed, std::chrono::seconds(30));
  ASSERT_EQ(eval.projects.size(), 4u);
  EXPECT_GE(project("insecure-python").true_positives, 8u);
  EXPECT_GE(project("mixed-c").true_positives + project("mixed-javascript").true_positives, 5u);
  EXPECT_LE(project("secure-java").false_positives, 1u);
  for (const auto &p : eval.projects)
    EXPECT_EQ(p.specific + p.generic, p.true_positives) << p.project_id;
}

TEST(Corpus, EvalJsonAgreesWithTheTable) {
  auto j = to_json(corpus_eval());
  ASSERT_EQ(j["projects"].size(), 4u);
  auto table = format_table(corpus_eval());
  for (const auto &p : j["projects"]) {
    EXPECT_EQ(p["true_positives"].get<std::size_t>() + p["false_negatives"].get<std::size_t>(),
              p["entries"].get<std::size_t>());
    EXPECT_NE(table.find(p["project_id"].get<std::string>()), std::string::npos);
  }
}
