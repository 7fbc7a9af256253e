#include "support.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <map>
#include <random>

using namespace malscan;
using namespace malscan::cvss;

namespace {

struct Reference {
  int tenths;
  std::string severity;
};

std::map<std::string, Reference> load_reference() {
  std::map<std::string, Reference> out;
  std::istringstream in(testsupport::read_text(MALSCAN_TEST_DATA "/cvss31_reference_scores.tsv"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream fields(line);
    std::string vector, score, severity;
    std::getline(fields, vector, '\t');
    std::getline(fields, score, '\t');
    std::getline(fields, severity, '\t');
    out[vector] = {static_cast<int>(std::lround(std::stod(score) * 10)), severity};
  }
  return out;
}

} // namespace

TEST(Cvss, MatchesReferenceCalculatorOnEveryCombination) {
  auto reference = load_reference();
  ASSERT_EQ(reference.size(), 2592u);
  auto t0 = std::chrono::steady_clock::now();
  auto vectors = all_vectors();
  ASSERT_EQ(vectors.size(), 2592u);
  std::size_t mismatches = 0;
  for (const auto &v : vectors) {
    auto text = render(v);
    auto it = reference.find(text);
    ASSERT_NE(it, reference.end()) << text;
    auto score = base_score(v);
    if (score.tenths() != it->second.tenths) {
      ++mismatches;
      ADD_FAILURE() << text << ": got " << score.str() << ", reference "
                    << it->second.tenths / 10.0;
    }
    std::string sev(to_string(score.severity()));
    sev[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sev[0])));
    EXPECT_EQ(sev, it->second.severity) << text;
  }
  EXPECT_EQ(mismatches, 0u);
  auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_LT(std::chrono::duration<double>(elapsed).count(), 5.0);
}

TEST(Cvss, SpotValues) {
  EXPECT_EQ(base_score(parse_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H")).str(), "9.8");
  EXPECT_EQ(base_score(parse_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:C/C:H/I:H/A:H")).str(), "10.0");
  EXPECT_EQ(base_score(parse_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:N")).tenths(), 0);
  EXPECT_EQ(base_score(parse_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:C/C:N/I:N/A:N")).tenths(), 0);
  EXPECT_EQ(base_score(parse_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:R/S:C/C:L/I:L/A:N")).str(), "6.1");
  EXPECT_EQ(base_score(parse_vector("CVSS:3.1/AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H")).str(), "7.8");
}

TEST(Cvss, RoundupWorksOnIntegers) {
  EXPECT_EQ(roundup_tenths(4.0), 40);
  EXPECT_EQ(roundup_tenths(4.000000000000001), 40);
  EXPECT_EQ(roundup_tenths(4.02), 41);
  EXPECT_EQ(roundup_tenths(4.1), 41);
  EXPECT_EQ(roundup_tenths(0.0), 0);
  EXPECT_EQ(roundup_tenths(9.99), 100);
}

TEST(Cvss, SeverityBands) {
  EXPECT_EQ(Score::from_tenths(0).severity(), Severity::none);
  EXPECT_EQ(Score::from_tenths(1).severity(), Severity::low);
  EXPECT_EQ(Score::from_tenths(39).severity(), Severity::low);
  EXPECT_EQ(Score::from_tenths(40).severity(), Severity::medium);
  EXPECT_EQ(Score::from_tenths(69).severity(), Severity::medium);
  EXPECT_EQ(Score::from_tenths(70).severity(), Severity::high);
  EXPECT_EQ(Score::from_tenths(89).severity(), Severity::high);
  EXPECT_EQ(Score::from_tenths(90).severity(), Severity::critical);
  EXPECT_EQ(Score::from_tenths(100).severity(), Severity::critical);
}

TEST(Cvss, ScoreIsAlwaysOnTheTenthGridAndInRange) {
  for (const auto &v : all_vectors()) {
    auto s = base_score(v);
    EXPECT_GE(s.tenths(), 0);
    EXPECT_LE(s.tenths(), 100);
    EXPECT_EQ(Score::from_decimal(s.value()), s);
  }
}

TEST(Cvss, RenderParseRoundTrip) {
  for (const auto &v : all_vectors())
    EXPECT_EQ(render(parse_vector(render(v))), render(v));
}

TEST(Cvss, MetricOrderDoesNotMatter) {
  auto a = parse_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H");
  auto b = parse_vector("CVSS:3.1/A:H/I:H/C:H/S:U/UI:N/PR:N/AC:L/AV:N");
  EXPECT_EQ(render(a), render(b));
}

TEST(Cvss, MalformedVectorsReportPosition) {
  struct Case {
    const char *text;
    std::size_t position;
  };
  for (auto c : {Case{"CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H", 0},
                 Case{"CVSS:3.1/", 9},
                 Case{"CVSS:3.1/AV:X/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H", 12},
                 Case{"CVSS:3.1/AV:N/AV:N/PR:N/UI:N/S:U/C:H/I:H/A:H", 14},
                 Case{"CVSS:3.1/AV:N/XX:L/PR:N/UI:N/S:U/C:H/I:H/A:H", 14},
                 Case{"CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H", 40},
                 Case{"CVSS:3.1/AV:N/AC:LL/PR:N/UI:N/S:U/C:H/I:H/A:H", 14}}) {
    try {
      parse_vector(c.text);
      ADD_FAILURE() << "accepted " << c.text;
    } catch (const MalformedVector &e) {
      EXPECT_EQ(e.position(), c.position) << c.text << ": " << e.what();
    }
  }
}

TEST(Cvss, RandomGarbageNeverCrashesTheParser) {
  std::mt19937 rng(7);
  const std::string alphabet = "CVS:3.1/AVNLPRUIHSCN:X";
  for (int i = 0; i < 2000; ++i) {
    std::string s = "CVSS:3.1/";
    auto len = std::uniform_int_distribution<int>(0, 60)(rng);
    for (int k = 0; k < len; ++k)
      s += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
    try {
      auto v = parse_vector(s);
      EXPECT_EQ(render(parse_vector(render(v))), render(v));
    } catch (const MalformedVector &e) {
      EXPECT_LE(e.position(), s.size());
    }
  }
}
