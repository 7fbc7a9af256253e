#pragma once

#include "malscan/malscan.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

namespace testsupport {

namespace fs = std::filesystem;

inline std::string read_text(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path &p, std::string_view text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("malscan-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  [[nodiscard]] const fs::path &path() const { return path_; }
  fs::path operator/(const std::string &rel) const { return path_ / rel; }

private:
  fs::path path_;
};

inline malscan::RuleSet bundled_rules() {
  return malscan::load_rules(malscan::assets::default_rules());
}

inline malscan::SourceFile source(std::string path, std::string_view text) {
  return malscan::SourceFile::from_bytes(std::move(path), text);
}

/// Wraps a backend and records every dispatched request; fails the request
/// if its estimate exceeds the budget it carries.
class RecordingBackend : public malscan::Backend {
public:
  explicit RecordingBackend(malscan::Backend &inner) : inner_(inner) {}

  [[nodiscard]] std::string id() const override { return inner_.id(); }
  [[nodiscard]] std::string template_version() const override {
    return inner_.template_version();
  }
  [[nodiscard]] std::size_t estimate_request_tokens(const malscan::BackendRequest &r) const override {
    return inner_.estimate_request_tokens(r);
  }
  std::string summarize(const malscan::BackendRequest &r) override {
    record(r);
    return inner_.summarize(r);
  }
  malscan::DetectionReport analyze(const malscan::BackendRequest &r) override {
    record(r);
    return inner_.analyze(r);
  }

  std::size_t over_budget() const { return over_budget_; }
  std::size_t dispatched() const { return dispatched_; }
  std::vector<std::string> analyzed_ids() const {
    std::lock_guard lock(mu_);
    return analyzed_;
  }

private:
  void record(const malscan::BackendRequest &r) {
    ++dispatched_;
    if (inner_.estimate_request_tokens(r) > r.token_budget)
      ++over_budget_;
    std::lock_guard lock(mu_);
    analyzed_.push_back(r.component.id);
  }

  malscan::Backend &inner_;
  std::atomic<std::size_t> dispatched_{0};
  std::atomic<std::size_t> over_budget_{0};
  mutable std::mutex mu_;
  std::vector<std::string> analyzed_;
};

/// A backend whose every call fails.
class FailingBackend : public malscan::Backend {
public:
  [[nodiscard]] std::string id() const override { return "failing"; }
  [[nodiscard]] std::string template_version() const override { return "1.00000000"; }
  [[nodiscard]] std::size_t estimate_request_tokens(const malscan::BackendRequest &r) const override {
    return malscan::estimate_tokens(r.component.source);
  }
  std::string summarize(const malscan::BackendRequest &) override {
    throw malscan::BackendUnavailable("connection refused");
  }
  malscan::DetectionReport analyze(const malscan::BackendRequest &) override {
    throw malscan::BackendUnavailable("connection refused");
  }
};

} // namespace testsupport
