#pragma once

#include "malscan/backend.hpp"
#include "malscan/componentizer.hpp"
#include "malscan/prescore.hpp"
#include "malscan/report.hpp"
#include "malscan/rules.hpp"
#include "malscan/source_file.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace malscan {

namespace fs = std::filesystem;

class ConfigError : public Error {
public:
  using Error::Error;
};

class RootMissing : public Error {
public:
  explicit RootMissing(const std::string &root) : Error("scan root does not exist: " + root) {}
};

struct ScanConfig {
  double flag_threshold = kDefaultFlagThreshold;
  std::size_t token_budget = kDefaultTokenBudget;
  std::size_t max_parallel = 4;
  std::string backend_id = "rules"; ///< "rules" or "model"
  bool force_analyze_all = false;
  bool full_report = false; ///< summarize every component, not just analyzed ones
  std::string rule_set_path; ///< empty: bundled rules
  std::vector<std::string> include; ///< empty: files of registered languages
  std::vector<std::string> exclude;
  std::size_t fragment_bytes = kDefaultFragmentBytes;
  double fail_threshold = 7.0;
  std::string cache_dir; ///< empty: no cache
  bool fixed_timestamps = false;

  void validate() const {
    if (!(flag_threshold >= 0.0 && flag_threshold <= 10.0))
      throw ConfigError("flag_threshold must be within [0.0, 10.0]");
    if (!(fail_threshold >= 0.0 && fail_threshold <= 10.0))
      throw ConfigError("fail_threshold must be within [0.0, 10.0]");
    if (token_budget == 0)
      throw ConfigError("token_budget must be positive");
    if (max_parallel == 0)
      throw ConfigError("max_parallel must be at least 1");
    if (fragment_bytes == 0)
      throw ConfigError("fragment_bytes must be positive");
    if (backend_id != "rules" && backend_id != "model")
      throw ConfigError("backend must be 'rules' or 'model', got '" + backend_id + "'");
  }
};

/// Digest over the settings that influence report content. Parallelism,
/// cache location, output paths and timestamps are left out.
inline std::string config_digest(const ScanConfig &cfg, const Backend &backend) {
  json j = {{"flag_threshold", threshold_tenths(cfg.flag_threshold)},
            {"token_budget", cfg.token_budget},
            {"backend", backend.id()},
            {"force_analyze_all", cfg.force_analyze_all},
            {"full_report", cfg.full_report},
            {"include", cfg.include},
            {"exclude", cfg.exclude},
            {"fragment_bytes", cfg.fragment_bytes}};
  return digest_of(j.dump());
}

// ---------------------------------------------------------------------------
// Path globs: `*` and `?` stay within one path segment, `**` crosses them.
// A pattern without '/' matches any single segment (so "vendor" or "*.min.js"
// work at every depth); a pattern with '/' matches the whole path or one of
// its leading directories.

namespace detail {

inline bool glob_here(std::string_view p, std::string_view s) {
  while (!p.empty()) {
    if (p.substr(0, 2) == "**") {
      auto rest = p.substr(2);
      if (!rest.empty() && rest[0] == '/' && glob_here(rest.substr(1), s))
        return true;
      for (std::size_t i = 0; i <= s.size(); ++i)
        if (glob_here(rest, s.substr(i)))
          return true;
      return false;
    }
    if (p[0] == '*') {
      auto rest = p.substr(1);
      for (std::size_t i = 0; i <= s.size(); ++i) {
        if (glob_here(rest, s.substr(i)))
          return true;
        if (i < s.size() && s[i] == '/')
          break;
      }
      return false;
    }
    if (s.empty() || (p[0] == '?' ? s[0] == '/' : p[0] != s[0]))
      return false;
    p.remove_prefix(1);
    s.remove_prefix(1);
  }
  return s.empty();
}

} // namespace detail

inline bool glob_match(std::string_view pattern, std::string_view path) {
  if (pattern.find('/') == std::string_view::npos) {
    std::size_t start = 0;
    while (start <= path.size()) {
      auto slash = path.find('/', start);
      auto end = slash == std::string_view::npos ? path.size() : slash;
      if (detail::glob_here(pattern, path.substr(start, end - start)))
        return true;
      if (slash == std::string_view::npos)
        break;
      start = slash + 1;
    }
    return false;
  }
  if (detail::glob_here(pattern, path))
    return true;
  for (auto slash = path.find('/'); slash != std::string_view::npos;
       slash = path.find('/', slash + 1))
    if (detail::glob_here(pattern, path.substr(0, slash)))
      return true;
  return false;
}

inline bool matches_any(const std::vector<std::string> &globs, std::string_view path) {
  return std::any_of(globs.begin(), globs.end(),
                     [&](const std::string &g) { return glob_match(g, path); });
}

// ---------------------------------------------------------------------------
// Result cache

struct CachedResult {
  std::string summary;
  DetectionReport detection;
};

/// Content-addressed store of analyzed outcomes under a directory.
class ResultCache {
public:
  explicit ResultCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  static std::string key(const CodeComponent &c, const std::string &content_hash,
                         const std::string &rule_digest, const Backend &backend,
                         std::size_t token_budget) {
    json j = {{"component", c.id},
              {"content", content_hash},
              {"span", {c.span.start, c.span.end}},
              {"rules", rule_digest},
              {"templates", backend.template_version()},
              {"backend", backend.id()},
              {"budget", token_budget}};
    return sha256_hex(j.dump());
  }

  [[nodiscard]] std::optional<CachedResult> get(const std::string &key) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in)
      return std::nullopt;
    try {
      auto j = json::parse(in);
      return CachedResult{j.at("summary").get<std::string>(), detection_from_json(j.at("detection"))};
    } catch (const std::exception &) {
      return std::nullopt; // unreadable entries are recomputed
    }
  }

  void put(const std::string &key, const CachedResult &value) const {
    auto target = path_for(key);
    fs::create_directories(target.parent_path());
    auto tmp = target;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << json{{"summary", value.summary}, {"detection", to_json(value.detection)}}.dump();
      if (!out)
        return;
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec)
      fs::remove(tmp, ec);
  }

  [[nodiscard]] std::size_t hits() const { return hits_; }
  void count_hit() { ++hits_; }

private:
  [[nodiscard]] fs::path path_for(const std::string &key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
  }

  fs::path dir_;
  std::atomic<std::size_t> hits_{0};
};

// ---------------------------------------------------------------------------
// Pipeline

namespace detail {

template <typename F>
void parallel_for(std::size_t n, std::size_t workers, F &&body) {
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;)
      body(i);
  };
  std::size_t extra = std::min(workers, n) > 0 ? std::min(workers, n) - 1 : 0;
  std::vector<std::jthread> threads;
  threads.reserve(extra);
  for (std::size_t k = 0; k < extra; ++k)
    threads.emplace_back(run);
  run();
}

/// Direct children's spans; a parent's prescore skips them so a method's
/// indicator is reported once, on the method.
inline std::vector<ByteSpan> child_spans(const std::vector<CodeComponent> &all,
                                         const CodeComponent &c) {
  std::vector<ByteSpan> out;
  for (const auto &other : all)
    if (other.parent_id && *other.parent_id == c.id)
      out.push_back(other.span);
  return out;
}

/// Splits `c` into fragments whose analyze prompts fit the budget.
inline std::vector<BackendRequest> chunk_requests(const BackendRequest &whole,
                                                  const Backend &backend) {
  const auto &c = whole.component;
  BackendRequest empty = whole;
  empty.component.source.clear();
  empty.summary.reset();
  const auto overhead = backend.estimate_request_tokens(empty);
  if (overhead + 2 > whole.token_budget)
    throw BudgetExceeded(overhead + 1, whole.token_budget);
  const std::size_t max_bytes = 3 * (whole.token_budget - overhead - 1);

  auto inner = SourceFile::from_bytes(c.path, c.source, c.language);
  auto pieces = fallback_fragment(inner, max_bytes);
  std::vector<BackendRequest> out;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const auto &piece = pieces[k];
    BackendRequest req = whole;
    req.summary.reset();
    auto &pc = req.component;
    pc.kind = ComponentKind::module_fragment;
    pc.name = c.name + "#" + std::to_string(k + 1);
    pc.span = {c.span.start + piece.span.start, c.span.start + piece.span.end};
    pc.source = piece.source;
    pc.line_start = c.line_start + piece.line_start - 1;
    pc.line_end = c.line_start + piece.line_end - 1;
    pc.parent_id = c.id;
    req.indicators.clear();
    for (const auto &ind : whole.indicators) {
      if (!ind.span.overlaps(piece.span))
        continue;
      Indicator moved = ind;
      moved.span.start = std::max(ind.span.start, piece.span.start) - piece.span.start;
      moved.span.end = std::min(ind.span.end, piece.span.end) - piece.span.start;
      req.indicators.push_back(std::move(moved));
    }
    out.push_back(std::move(req));
  }
  return out;
}

inline void check_budget(const BackendRequest &req, const Backend &backend) {
  auto estimated = backend.estimate_request_tokens(req);
  if (estimated > req.token_budget)
    throw BudgetExceeded(estimated, req.token_budget);
}

struct Analysis {
  std::string summary;
  DetectionReport detection;
};

/// Summarize then analyze one component, chunking when the prompt would
/// not fit the budget. Throws BackendError subclasses on failure.
inline Analysis analyze_component(const CodeComponent &c, const std::vector<Indicator> &indicators,
                                  const ScanConfig &cfg, Backend &backend) {
  BackendRequest req;
  req.task = Task::analyze;
  req.component = c;
  req.indicators = indicators;
  req.language = c.language;
  req.token_budget = cfg.token_budget;

  if (backend.estimate_request_tokens(req) <= cfg.token_budget) {
    BackendRequest sreq = req;
    sreq.task = Task::summarize;
    check_budget(sreq, backend);
    Analysis a;
    a.summary = backend.summarize(sreq);
    req.summary = a.summary;
    if (backend.estimate_request_tokens(req) > cfg.token_budget)
      req.summary.reset();
    a.detection = backend.analyze(req);
    a.detection.component_id = c.id;
    a.detection.summary = a.summary;
    return a;
  }

  Analysis a;
  a.detection.component_id = c.id;
  a.detection.backend_id = backend.id();
  std::string digests;
  for (auto &chunk : chunk_requests(req, backend)) {
    BackendRequest sreq = chunk;
    sreq.task = Task::summarize;
    check_budget(sreq, backend);
    auto part_summary = backend.summarize(sreq);
    chunk.summary = part_summary;
    if (backend.estimate_request_tokens(chunk) > cfg.token_budget)
      chunk.summary.reset();
    check_budget(chunk, backend);
    auto part = backend.analyze(chunk);
    if (!a.summary.empty())
      a.summary += " ";
    a.summary += "[" + chunk.component.name + "] " + part_summary;
    for (auto &f : part.findings)
      a.detection.findings.push_back(std::move(f));
    digests += part.raw_response_digest + "\n";
  }
  sort_findings(a.detection.findings);
  a.detection.summary = a.summary;
  a.detection.raw_response_digest = digest_of(digests);
  return a;
}

inline std::string summary_only(const CodeComponent &c, const ScanConfig &cfg, Backend &backend) {
  BackendRequest req;
  req.task = Task::summarize;
  req.component = c;
  req.language = c.language;
  req.token_budget = cfg.token_budget;
  if (backend.estimate_request_tokens(req) <= cfg.token_budget)
    return backend.summarize(req);
  std::string out;
  for (auto &chunk : chunk_requests(req, backend)) {
    chunk.task = Task::summarize;
    check_budget(chunk, backend);
    if (!out.empty())
      out += " ";
    out += "[" + chunk.component.name + "] " + backend.summarize(chunk);
  }
  return out;
}

struct Job {
  const SourceFile *file;
  const std::vector<CodeComponent> *siblings;
  std::size_t index;
};

inline ComponentOutcome run_job(const Job &job, const ScanConfig &cfg, const RuleSet &rules,
                                Backend &backend, ResultCache *cache) {
  const auto &c = (*job.siblings)[job.index];
  ComponentOutcome o;
  o.component = c;
  o.prescore = prescore(c, rules, cfg.flag_threshold, child_spans(*job.siblings, c));
  const bool route = o.prescore.flagged || cfg.force_analyze_all;
  if (!route) {
    o.status = OutcomeStatus::skipped_low_risk;
    if (cfg.full_report) {
      try {
        o.component.summary = summary_only(c, cfg, backend);
      } catch (const std::exception &e) {
        o.error = e.what();
      }
    }
    return o;
  }
  std::string key;
  if (cache) {
    key = ResultCache::key(c, job.file->content_hash, rules.digest, backend, cfg.token_budget);
    if (auto hit = cache->get(key)) {
      cache->count_hit();
      o.status = OutcomeStatus::analyzed;
      o.component.summary = hit->summary;
      o.detection = std::move(hit->detection);
      return o;
    }
  }
  try {
    auto a = analyze_component(c, o.prescore.indicators, cfg, backend);
    o.status = OutcomeStatus::analyzed;
    o.component.summary = a.summary;
    o.detection = std::move(a.detection);
    if (cache)
      cache->put(key, {a.summary, *o.detection});
  } catch (const std::exception &e) {
    o.status = OutcomeStatus::degraded_backend_error;
    o.detection.reset();
    o.error = e.what();
  }
  return o;
}

} // namespace detail

/// Runs the pipeline over one loaded file. Components are processed on up
/// to cfg.max_parallel threads; the result is ordered by span.
inline std::vector<ComponentOutcome> scan_file(const SourceFile &file, const ScanConfig &cfg,
                                               const RuleSet &rules, Backend &backend,
                                               ResultCache *cache = nullptr,
                                               std::vector<std::string> *warnings = nullptr) {
  auto dec = decompose_or_fallback(file, cfg.fragment_bytes);
  if (warnings)
    warnings->insert(warnings->end(), dec.warnings.begin(), dec.warnings.end());
  std::vector<ComponentOutcome> out(dec.components.size());
  detail::parallel_for(out.size(), cfg.max_parallel, [&](std::size_t i) {
    out[i] = detail::run_job({&file, &dec.components, i}, cfg, rules, backend, cache);
  });
  FileSection tmp;
  tmp.components = std::move(out);
  ScanReport r;
  r.files.push_back(std::move(tmp));
  normalize(r);
  return std::move(r.files.front().components);
}

/// Relative '/'-separated paths of the files selected under `root`, sorted.
inline std::vector<std::string> select_files(const fs::path &root, const ScanConfig &cfg) {
  std::vector<std::string> out;
  auto keep = [&](const std::string &rel) {
    bool included = cfg.include.empty()
                        ? detect_language(rel, std::nullopt) != LanguageId::unknown
                        : matches_any(cfg.include, rel);
    return included && !matches_any(cfg.exclude, rel);
  };
  if (fs::is_regular_file(root)) {
    auto rel = root.filename().generic_string();
    if (keep(rel))
      out.push_back(rel);
    return out;
  }
  std::error_code ec;
  for (fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec), end;
       it != end; it.increment(ec)) {
    if (ec)
      break;
    if (!it->is_regular_file(ec))
      continue;
    auto rel = fs::relative(it->path(), root, ec).generic_string();
    if (!ec && keep(rel))
      out.push_back(rel);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Walks `root` (a directory or a single file) and builds the full report.
inline ScanReport scan_tree(const fs::path &root, const ScanConfig &cfg, const RuleSet &rules,
                            Backend &backend, ResultCache *cache = nullptr) {
  cfg.validate();
  std::error_code ec;
  if (!fs::exists(root, ec))
    throw RootMissing(root.string());

  ScanReport report;
  report.started_at = cfg.fixed_timestamps ? std::string(kFixedTimestamp) : utc_timestamp();
  report.backend_id = backend.id();
  report.template_version = backend.template_version();
  report.config_digest = config_digest(cfg, backend);
  report.rule_set_digest = rules.digest;

  const bool single = fs::is_regular_file(root);
  struct Loaded {
    SourceFile file;
    Decomposition dec;
  };
  std::vector<Loaded> loaded;
  for (const auto &rel : select_files(root, cfg)) {
    auto disk = single ? root : root / fs::path(rel);
    try {
      auto file = load_source_file(disk, rel);
      auto dec = decompose_or_fallback(file, cfg.fragment_bytes);
      loaded.push_back({std::move(file), std::move(dec)});
    } catch (const FileUnreadable &e) {
      report.errors.push_back({rel, e.what()});
    }
  }

  std::vector<detail::Job> jobs;
  for (const auto &l : loaded)
    for (std::size_t i = 0; i < l.dec.components.size(); ++i)
      jobs.push_back({&l.file, &l.dec.components, i});
  std::vector<ComponentOutcome> outcomes(jobs.size());
  detail::parallel_for(jobs.size(), cfg.max_parallel, [&](std::size_t i) {
    outcomes[i] = detail::run_job(jobs[i], cfg, rules, backend, cache);
  });

  std::size_t next = 0;
  for (const auto &l : loaded) {
    FileSection f;
    f.path = l.file.path;
    f.language = l.file.language;
    f.content_hash = l.file.content_hash;
    f.warnings = l.file.warnings;
    f.warnings.insert(f.warnings.end(), l.dec.warnings.begin(), l.dec.warnings.end());
    for (std::size_t i = 0; i < l.dec.components.size(); ++i)
      f.components.push_back(std::move(outcomes[next++]));
    report.files.push_back(std::move(f));
  }
  report.finished_at = cfg.fixed_timestamps ? std::string(kFixedTimestamp) : utc_timestamp();
  normalize(report);
  return report;
}

} // namespace malscan
