// malscan: component-wise security scanner.
//
//   malscan scan <path> [--backend rules|model] [--format json|markdown|both] [-o FILE]
//   malscan rules-check [RULE_FILE]
//   malscan render <report.json> [-o FILE]
//   malscan eval [--corpus DIR] [--json FILE]

#include "malscan/bundled_corpus.hpp"
#include "malscan/config.hpp"
#include "malscan/eval.hpp"
#include "malscan/malscan.hpp"
#include "malscan/model_backend.hpp"

#include <CLI11.hpp>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using namespace malscan;

namespace {

constexpr int kUsageError = 2;

std::string read_text(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out)
    throw Error("cannot write " + path);
}

RuleSet load_rule_file(const std::string &path) {
  if (path.empty())
    return load_rules(assets::default_rules());
  return load_rules(read_text(path));
}

std::unique_ptr<Backend> make_backend(const AppConfig &cfg, const RuleSet &rules) {
  auto templates = assets::prompt_templates();
  if (cfg.scan.backend_id == "model") {
    if (cfg.model.endpoint.empty())
      throw ConfigError("the model backend needs an endpoint (--model-endpoint or model.endpoint)");
    return std::make_unique<ModelBackend>(cfg.model, templates);
  }
  return std::make_unique<RuleBackend>(rules, templates);
}

struct ScanOptions {
  std::string target;
  std::string config_path;
  std::string format = "json";
  std::string output;
  std::string markdown_output;
  AppConfig overrides;
};

int cmd_scan(const ScanOptions &opt, const CLI::App &sub) {
  AppConfig cfg;
  if (!opt.config_path.empty())
    cfg = parse_config(read_text(opt.config_path));
  const auto &o = opt.overrides;
  auto given = [&](const char *name) { return sub.get_option(name)->count() > 0; };
  if (given("--backend")) cfg.scan.backend_id = o.scan.backend_id;
  if (given("--threshold")) cfg.scan.flag_threshold = o.scan.flag_threshold;
  if (given("--fail-threshold")) cfg.scan.fail_threshold = o.scan.fail_threshold;
  if (given("--token-budget")) cfg.scan.token_budget = o.scan.token_budget;
  if (given("--max-parallel")) cfg.scan.max_parallel = o.scan.max_parallel;
  if (given("--rules")) cfg.scan.rule_set_path = o.scan.rule_set_path;
  if (given("--include")) cfg.scan.include = o.scan.include;
  if (given("--exclude")) cfg.scan.exclude = o.scan.exclude;
  if (given("--fragment-bytes")) cfg.scan.fragment_bytes = o.scan.fragment_bytes;
  if (given("--cache-dir")) cfg.scan.cache_dir = o.scan.cache_dir;
  if (given("--force-analyze-all")) cfg.scan.force_analyze_all = true;
  if (given("--full-report")) cfg.scan.full_report = true;
  if (given("--fixed-timestamps")) cfg.scan.fixed_timestamps = true;
  if (given("--model-endpoint")) cfg.model.endpoint = o.model.endpoint;
  if (given("--model-name")) cfg.model.model = o.model.model;
  if (given("--model-timeout")) cfg.model.timeout_seconds = o.model.timeout_seconds;
  if (given("--model-max-concurrent")) cfg.model.max_concurrent = o.model.max_concurrent;
  cfg.scan.validate();

  std::string markdown_path = opt.markdown_output;
  if (opt.format == "both" && markdown_path.empty()) {
    if (opt.output.empty() || opt.output == "-")
      throw ConfigError("--format both needs -o and/or --markdown-output so the two reports do not share stdout");
    markdown_path = fs::path(opt.output).replace_extension(".md").string();
  }

  auto rules = load_rule_file(cfg.scan.rule_set_path);
  auto backend = make_backend(cfg, rules);
  std::unique_ptr<ResultCache> cache;
  if (!cfg.scan.cache_dir.empty())
    cache = std::make_unique<ResultCache>(cfg.scan.cache_dir);

  auto report = scan_tree(opt.target, cfg.scan, rules, *backend, cache.get());
  if (opt.format == "json" || opt.format == "both")
    write_text(opt.output, to_json(report));
  if (opt.format == "markdown")
    write_text(opt.markdown_output.empty() ? opt.output : opt.markdown_output, to_markdown(report));
  if (opt.format == "both")
    write_text(markdown_path, to_markdown(report));

  for (const auto &e : report.errors)
    std::cerr << "error: " << e.path << ": " << e.message << "\n";
  bool report_on_stdout = (opt.format != "markdown" && (opt.output.empty() || opt.output == "-")) ||
                          (opt.format == "markdown" && opt.output.empty() && opt.markdown_output.empty());
  if (!report_on_stdout) {
    const auto &t = report.totals;
    std::cout << "scanned " << t.files << " file(s), " << t.components << " component(s): "
              << t.analyzed << " analyzed, " << t.skipped << " skipped, " << t.degraded
              << " degraded; " << t.findings << " finding(s)\n";
  }
  return exit_code(report, cfg.scan.fail_threshold);
}

int cmd_rules_check(const std::string &path) {
  auto rules = load_rule_file(path);
  std::map<VulnCategory, std::size_t> per_category;
  for (const auto &r : rules.rules)
    ++per_category[r.category];
  std::cout << rules.rules.size() << " rule(s) loaded from "
            << (path.empty() ? std::string("bundled rules") : path) << " (" << rules.digest << ")\n";
  for (const auto &[cat, n] : per_category)
    std::cout << "  " << to_string(cat) << ": " << n << "\n";
  return 0;
}

int cmd_render(const std::string &input, const std::string &output) {
  auto report = report_from_json(read_text(input));
  write_text(output, to_markdown(report));
  return 0;
}

struct EvalOptions {
  std::string corpus;
  std::string corpus_out;
  std::string json_out;
  std::string rules;
  std::size_t max_parallel = 4;
};

int cmd_eval(const EvalOptions &opt) {
  fs::path root = opt.corpus;
  bool temporary = false;
  if (root.empty()) {
    if (!opt.corpus_out.empty()) {
      root = opt.corpus_out;
    } else {
      root = fs::temp_directory_path() / ("malscan-corpus-" + std::to_string(::getpid()));
      temporary = true;
    }
    build_bundled_corpus(root);
  }
  struct Cleanup {
    fs::path dir;
    bool active;
    ~Cleanup() {
      std::error_code ec;
      if (active)
        fs::remove_all(dir, ec);
    }
  } cleanup{root, temporary};

  ScanConfig cfg;
  cfg.max_parallel = opt.max_parallel;
  auto rules = load_rule_file(opt.rules);
  RuleBackend backend(rules, assets::prompt_templates());
  auto result = evaluate_corpus(root, cfg, rules, backend);
  std::cout << format_table(result);
  if (!opt.json_out.empty())
    write_text(opt.json_out, canonical_json(to_json(result)));
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Component-wise security scanner with CVSS triage and exploit-trace reports"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1, 1);

  ScanOptions scan;
  auto *sc = app.add_subcommand("scan", "Scan a file or directory tree");
  sc->add_option("target", scan.target, "File or directory to scan")->required();
  sc->add_option("-c,--config", scan.config_path, "YAML config file");
  sc->add_option("--backend", scan.overrides.scan.backend_id, "Analysis backend")
      ->check(CLI::IsMember({"rules", "model"}));
  sc->add_option("--threshold", scan.overrides.scan.flag_threshold,
                 "Prescore at or above which a component is analyzed (default 4.0)")
      ->check(CLI::Range(0.0, 10.0));
  sc->add_option("--fail-threshold", scan.overrides.scan.fail_threshold,
                 "Exit 1 when a finding scores at or above this (default 7.0)")
      ->check(CLI::Range(0.0, 10.0));
  sc->add_option("--format", scan.format, "Report format")
      ->check(CLI::IsMember({"json", "markdown", "both"}));
  sc->add_option("-o,--output", scan.output, "Report path (default stdout)");
  sc->add_option("--markdown-output", scan.markdown_output, "Markdown report path");
  sc->add_option("--rules", scan.overrides.scan.rule_set_path, "Rule file (default bundled)");
  sc->add_option("--max-parallel", scan.overrides.scan.max_parallel, "Concurrent component analyses")
      ->check(CLI::PositiveNumber);
  sc->add_option("--token-budget", scan.overrides.scan.token_budget, "Token budget per backend request")
      ->check(CLI::PositiveNumber);
  sc->add_option("--fragment-bytes", scan.overrides.scan.fragment_bytes,
                 "Fragment size for files without a language scanner")
      ->check(CLI::PositiveNumber);
  sc->add_option("--include", scan.overrides.scan.include, "Path glob to include (repeatable)");
  sc->add_option("--exclude", scan.overrides.scan.exclude, "Path glob to exclude (repeatable)");
  sc->add_option("--cache-dir", scan.overrides.scan.cache_dir, "Directory for cached results");
  sc->add_flag("--force-analyze-all", "Analyze every component regardless of prescore");
  sc->add_flag("--full-report", "Summarize every component, including skipped ones");
  sc->add_flag("--fixed-timestamps", "Write 1970-01-01T00:00:00Z instead of wall-clock times");
  sc->add_option("--model-endpoint", scan.overrides.model.endpoint, "Chat-completions URL");
  sc->add_option("--model-name", scan.overrides.model.model, "Model name sent with each request");
  sc->add_option("--model-timeout", scan.overrides.model.timeout_seconds, "Per-request timeout in seconds")
      ->check(CLI::PositiveNumber);
  sc->add_option("--model-max-concurrent", scan.overrides.model.max_concurrent,
                 "Maximum in-flight model requests")
      ->check(CLI::PositiveNumber);

  std::string rules_path;
  auto *rc = app.add_subcommand("rules-check", "Load a rule file and report problems");
  rc->add_option("rule_file", rules_path, "Rule file (default bundled)");

  std::string render_input, render_output;
  auto *rd = app.add_subcommand("render", "Render a stored JSON report as Markdown");
  rd->add_option("report", render_input, "JSON report")->required();
  rd->add_option("-o,--output", render_output, "Markdown path (default stdout)");

  EvalOptions ev;
  auto *ec = app.add_subcommand("eval", "Score the rule backend against a labeled corpus");
  ec->add_option("--corpus", ev.corpus, "Corpus directory (default: bundled corpus)");
  ec->add_option("--corpus-out", ev.corpus_out, "Write the bundled corpus here and keep it");
  ec->add_option("--json", ev.json_out, "Write results as JSON");
  ec->add_option("--rules", ev.rules, "Rule file (default bundled)");
  ec->add_option("--max-parallel", ev.max_parallel, "Concurrent component analyses")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (sc->parsed())
      return cmd_scan(scan, *sc);
    if (rc->parsed())
      return cmd_rules_check(rules_path);
    if (rd->parsed())
      return cmd_render(render_input, render_output);
    if (ec->parsed())
      return cmd_eval(ev);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
