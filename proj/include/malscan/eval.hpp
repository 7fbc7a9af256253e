#pragma once

#include "malscan/orchestrator.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace malscan {

enum class SecurityProfile { secure, insecure, mixed };

inline std::string_view to_string(SecurityProfile p) {
  switch (p) {
  case SecurityProfile::secure: return "secure";
  case SecurityProfile::insecure: return "insecure";
  case SecurityProfile::mixed: return "mixed";
  }
  return "";
}

class ManifestMismatch : public Error {
public:
  using Error::Error;
};

struct GroundTruth {
  std::string id;
  std::string file;
  std::size_t line_start = 0;
  std::size_t line_end = 0;
  VulnCategory category = VulnCategory::sql_injection;
};

struct CorpusManifest {
  std::string project_id;
  SecurityProfile profile = SecurityProfile::secure;
  std::vector<GroundTruth> entries;
  /// entry id -> "specific" | "generic", from the annotations file
  std::map<std::string, std::string> remediation_labels;
};

struct Match {
  std::string entry_id;  ///< empty for a false positive
  std::string file;
  VulnCategory category = VulnCategory::sql_injection;
  std::string component; ///< name of the component carrying the finding; empty for a miss
  cvss::Score score;
};

struct ProjectResult {
  std::string project_id;
  SecurityProfile profile = SecurityProfile::secure;
  std::size_t entries = 0;
  std::size_t findings = 0;
  std::size_t true_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t false_positives = 0;
  std::size_t specific = 0; ///< matched entries whose remediation is labeled specific
  std::size_t generic = 0;
  std::vector<Match> matched, missed, spurious;

  [[nodiscard]] double recall() const {
    auto d = true_positives + false_negatives;
    return d == 0 ? 1.0 : static_cast<double>(true_positives) / static_cast<double>(d);
  }
  [[nodiscard]] double precision() const {
    auto d = true_positives + false_positives;
    return d == 0 ? 1.0 : static_cast<double>(true_positives) / static_cast<double>(d);
  }
};

struct EvalResult {
  std::vector<ProjectResult> projects;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_range(const YAML::Node &n) {
  if (n.IsSequence() && n.size() == 2)
    return {n[0].as<std::size_t>(), n[1].as<std::size_t>()};
  auto single = n.as<std::size_t>();
  return {single, single};
}

} // namespace detail

/// Reads manifest.yaml (and annotations.yaml when given) of one project.
inline CorpusManifest parse_manifest(std::string_view manifest_text,
                                     std::string_view annotations_text = {}) {
  CorpusManifest m;
  try {
    auto root = YAML::Load(std::string(manifest_text));
    m.project_id = root["project_id"].as<std::string>();
    auto profile = root["security_profile"].as<std::string>();
    if (profile == "secure") m.profile = SecurityProfile::secure;
    else if (profile == "insecure") m.profile = SecurityProfile::insecure;
    else if (profile == "mixed") m.profile = SecurityProfile::mixed;
    else throw ManifestMismatch("unknown security_profile '" + profile + "'");
    if (auto entries = root["entries"]) {
      for (const auto &e : entries) {
        GroundTruth g;
        g.id = e["id"].as<std::string>();
        g.file = e["file"].as<std::string>();
        std::tie(g.line_start, g.line_end) = detail::line_range(e["lines"]);
        auto cat = e["category"].as<std::string>();
        auto parsed = parse_category(cat);
        if (!parsed)
          throw ManifestMismatch("entry " + g.id + ": unknown category '" + cat + "'");
        g.category = *parsed;
        if (g.line_start == 0 || g.line_end < g.line_start)
          throw ManifestMismatch("entry " + g.id + ": bad line range");
        m.entries.push_back(std::move(g));
      }
    }
    if (!annotations_text.empty()) {
      auto ann = YAML::Load(std::string(annotations_text));
      if (auto labels = ann["remediation"]) {
        for (const auto &kv : labels) {
          auto label = kv.second.as<std::string>();
          if (label != "specific" && label != "generic")
            throw ManifestMismatch("annotation for " + kv.first.as<std::string>() +
                                   " must be 'specific' or 'generic'");
          m.remediation_labels[kv.first.as<std::string>()] = label;
        }
      }
    }
  } catch (const YAML::Exception &e) {
    throw ManifestMismatch(std::string("manifest is malformed: ") + e.what());
  }
  if (m.profile == SecurityProfile::secure && !m.entries.empty())
    throw ManifestMismatch("secure project " + m.project_id + " must not list vulnerabilities");
  return m;
}

/// One-to-one matching of findings to ground truth, greedy by score.
inline ProjectResult match_findings(const ScanReport &report, const CorpusManifest &manifest) {
  std::set<std::string> scanned;
  for (const auto &f : report.files)
    scanned.insert(f.path);
  for (const auto &e : manifest.entries)
    if (!scanned.count(e.file))
      throw ManifestMismatch("manifest entry " + e.id + " names " + e.file +
                             ", which is not in the scanned corpus");

  struct Candidate {
    const FileSection *file;
    const CodeComponent *component;
    const Finding *finding;
  };
  std::vector<Candidate> candidates;
  for (const auto &f : report.files)
    for (const auto &o : f.components)
      if (o.detection)
        for (const auto &fd : o.detection->findings)
          candidates.push_back({&f, &o.component, &fd});
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate &a, const Candidate &b) {
                     return a.finding->score > b.finding->score;
                   });

  ProjectResult r;
  r.project_id = manifest.project_id;
  r.profile = manifest.profile;
  r.entries = manifest.entries.size();
  r.findings = candidates.size();
  std::vector<bool> used(manifest.entries.size(), false);
  for (const auto &c : candidates) {
    Match m{"", c.file->path, c.finding->category, c.component->name, c.finding->score};
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      const auto &e = manifest.entries[i];
      if (used[i] || e.file != c.file->path || e.category != c.finding->category)
        continue;
      if (c.component->line_end < e.line_start || e.line_end < c.component->line_start)
        continue;
      used[i] = true;
      m.entry_id = e.id;
      break;
    }
    if (m.entry_id.empty()) {
      r.spurious.push_back(std::move(m));
    } else {
      auto label = manifest.remediation_labels.find(m.entry_id);
      if (label != manifest.remediation_labels.end())
        ++(label->second == "specific" ? r.specific : r.generic);
      r.matched.push_back(std::move(m));
    }
  }
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    if (!used[i]) {
      const auto &e = manifest.entries[i];
      r.missed.push_back({e.id, e.file, e.category, "", {}});
    }
  r.true_positives = r.matched.size();
  r.false_positives = r.spurious.size();
  r.false_negatives = r.missed.size();
  return r;
}

inline CorpusManifest load_manifest(const fs::path &project_dir) {
  auto read = [](const fs::path &p) -> std::string {
    std::ifstream in(p, std::ios::binary);
    if (!in)
      return {};
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  };
  auto manifest = read(project_dir / "manifest.yaml");
  if (manifest.empty())
    throw ManifestMismatch("missing manifest.yaml in " + project_dir.string());
  return parse_manifest(manifest, read(project_dir / "annotations.yaml"));
}

/// Scans every project directory under `corpus_root` (one with a
/// manifest.yaml) and scores it against its manifest.
inline EvalResult evaluate_corpus(const fs::path &corpus_root, ScanConfig cfg,
                                  const RuleSet &rules, Backend &backend) {
  if (!fs::is_directory(corpus_root))
    throw RootMissing(corpus_root.string());
  std::vector<fs::path> projects;
  for (const auto &entry : fs::directory_iterator(corpus_root))
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.yaml"))
      projects.push_back(entry.path());
  std::sort(projects.begin(), projects.end());

  cfg.exclude.push_back("manifest.yaml");
  cfg.exclude.push_back("annotations.yaml");
  cfg.fixed_timestamps = true;
  EvalResult result;
  for (const auto &dir : projects) {
    auto manifest = load_manifest(dir);
    auto report = scan_tree(dir, cfg, rules, backend);
    result.projects.push_back(match_findings(report, manifest));
  }
  return result;
}

inline json to_json(const EvalResult &r) {
  auto matches = [](const std::vector<Match> &ms) {
    json out = json::array();
    for (const auto &m : ms)
      out.push_back({{"entry", m.entry_id.empty() ? json(nullptr) : json(m.entry_id)},
                     {"file", m.file},
                     {"category", to_string(m.category)},
                     {"component", m.component.empty() ? json(nullptr) : json(m.component)}});
    return out;
  };
  json projects = json::array();
  for (const auto &p : r.projects)
    projects.push_back({{"project_id", p.project_id},
                        {"security_profile", to_string(p.profile)},
                        {"entries", p.entries},
                        {"findings", p.findings},
                        {"true_positives", p.true_positives},
                        {"false_negatives", p.false_negatives},
                        {"false_positives", p.false_positives},
                        {"recall", p.recall()},
                        {"precision", p.precision()},
                        {"remediation", {{"specific", p.specific}, {"generic", p.generic}}},
                        {"matched", matches(p.matched)},
                        {"missed", matches(p.missed)},
                        {"false_positive_findings", matches(p.spurious)}});
  return {{"projects", std::move(projects)}};
}

inline std::string format_table(const EvalResult &r) {
  auto fixed3 = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w)
      s.append(w - s.size(), ' ');
    return s;
  };
  std::string out = pad("project", 20) + pad("profile", 10) + pad("entries", 9) + pad("TP", 5) +
                    pad("FN", 5) + pad("FP", 5) + pad("recall", 8) + pad("precision", 11) +
                    "remediation (specific/generic)\n";
  for (const auto &p : r.projects)
    out += pad(p.project_id, 20) + pad(std::string(to_string(p.profile)), 10) +
           pad(std::to_string(p.entries), 9) + pad(std::to_string(p.true_positives), 5) +
           pad(std::to_string(p.false_negatives), 5) + pad(std::to_string(p.false_positives), 5) +
           pad(fixed3(p.recall()), 8) + pad(fixed3(p.precision()), 11) +
           std::to_string(p.specific) + "/" + std::to_string(p.generic) + "\n";
  return out;
}

} // namespace malscan
