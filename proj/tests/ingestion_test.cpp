#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "apme/error.hpp"
#include "apme/ingestion.hpp"
#include "support/fixtures.hpp"

namespace apme {
namespace {

IngestResult load_text(const std::string& text) {
  std::istringstream in(text);
  return load_generic_csv(in);
}

TEST(LoadGenericCsv, CleanInput) {
  const auto r = load_text("problem_id,milsec,marks\nq1,1200,1\nq2,3400,0\nq1,800,0.5\n");
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.report.rows_read, 3u);
  EXPECT_EQ(r.report.rows_dropped_invalid, 0u);
  EXPECT_EQ(r.report.problems_retained, 2u);
  EXPECT_EQ(r.records[2], (ResponseRecord{"q1", 800, 0.5}));
}

TEST(LoadGenericCsv, ColumnOrderAndExtrasIgnored) {
  const auto r = load_text("marks,student,problem_id,milsec\r\n4,s1,Q8,600000\r\n");
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0], (ResponseRecord{"Q8", 600000, 4.0}));
}

TEST(LoadGenericCsv, ZeroTimeDropped) {
  const auto r = load_text("problem_id,milsec,marks\nq1,0,1\nq1,10,1\n");
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.report.rows_dropped_invalid, 1u);
}

TEST(LoadGenericCsv, OneBadRowAmongTen) {
  std::string text = "problem_id,milsec,marks\n";
  for (int i = 0; i < 10; ++i) {
    if (i == 6)
      text += "q" + std::to_string(i % 3) + ",,1\n";  // no time
    else
      text += "q" + std::to_string(i % 3) + "," + std::to_string(1000 + i) + ",1\n";
  }
  const auto r = load_text(text);
  EXPECT_EQ(r.records.size(), 9u);
  EXPECT_EQ(r.report.rows_read, 10u);
  EXPECT_EQ(r.report.rows_dropped_invalid, 1u);
}

TEST(LoadGenericCsv, MalformedValuesDropped) {
  const auto r = load_text(
      "problem_id,milsec,marks\n"
      ",100,1\n"        // empty id
      "q,abc,1\n"       // non-numeric time
      "q,12.5,1\n"      // fractional time
      "q,100,x\n"       // non-numeric marks
      "q,-4,1\n"        // negative time
      "q,100\n"         // short row
      "q,100,-1\n");    // negative marks are valid
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].marks, -1.0);
  EXPECT_EQ(r.report.rows_dropped_invalid, 6u);
  EXPECT_GE(r.report.rows_read, r.report.rows_dropped_invalid);
}

TEST(LoadGenericCsv, MissingColumnIsSchemaError) {
  EXPECT_THROW(load_text("problem_id,time,marks\nq,1,1\n"), SchemaError);
  EXPECT_THROW(load_text(""), SchemaError);
}

TEST(LoadGenericCsv, MissingFileIsIoError) {
  EXPECT_THROW(load_generic_csv(std::string("/nonexistent/dir/records.csv")), IoError);
}

TEST(LoadSkybenCsv, AcceptsTimeMsColumn) {
  std::istringstream in("student_id,problem_id,time_ms,marks\ns1,A,4200,5\ns2,A,9000,0\n");
  const auto r = load_skyben_csv(in);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0], (ResponseRecord{"A", 4200, 5.0}));
}

TEST(CanonicalCsv, RoundTripIsExactProperty) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> t(1, 10'000'000);
  std::uniform_real_distribution<double> m(-3.0, 5.0);
  std::vector<ResponseRecord> recs;
  for (int i = 0; i < 500; ++i)
    recs.push_back({"id," + std::to_string(i % 17) + (i % 5 == 0 ? "\"q\"" : ""), t(rng), m(rng)});
  recs.push_back({"plain", 1, 0.1});
  std::ostringstream first;
  write_canonical_csv(recs, first);
  std::istringstream in(first.str());
  const auto loaded = load_generic_csv(in);
  EXPECT_EQ(loaded.records, recs);
  std::ostringstream second;
  write_canonical_csv(loaded.records, second);
  EXPECT_EQ(first.str(), second.str());
}

TEST(ParseTimestamp, Formats) {
  const auto a = parse_timestamp_us("2012-09-27 09:25:37");
  const auto b = parse_timestamp_us("2012-09-27T09:25:37Z");
  const auto c = parse_timestamp_us("2012-09-27T11:25:37+02:00");
  const auto d = parse_timestamp_us("2012-09-27 09:25:37.5");
  const auto e = parse_timestamp_us("2012-09-27 09:25:37.123456789");
  ASSERT_TRUE(a && b && c && d && e);
  EXPECT_EQ(*a, *b);
  EXPECT_EQ(*a, *c);
  EXPECT_EQ(*d - *a, 500'000);
  EXPECT_EQ(*e - *a, 123'456);
  // 2012-09-27T09:25:37Z is 1348737937 s after the epoch.
  EXPECT_EQ(*a, 1'348'737'937'000'000LL);
}

TEST(ParseTimestamp, RejectsInvalid) {
  for (const char* s : {"", "not-a-time", "2013-13-01 10:00:00", "2013-02-30 10:00:00",
                        "2013-02-01 25:00:00", "2013-02-01T10:00", "2013-02-01 10:00:00.",
                        "2013-02-01 10:00:00+5", "2013/02/01 10:00:00"}) {
    EXPECT_FALSE(parse_timestamp_us(s).has_value()) << s;
  }
}

std::vector<TimssRawRow> timss_rows(const std::string& id, std::size_t n, std::int64_t dur_ms) {
  std::vector<TimssRawRow> rows;
  for (std::size_t i = 0; i < n; ++i)
    rows.push_back({id, "2012-10-01 08:00:00", testing::iso_timestamp(1'349'078'400'000LL + dur_ms,
                                                                      false, false),
                    "1"});
  return rows;
}

TEST(PreprocessTimss, DurationInMilliseconds) {
  std::vector<TimssRawRow> rows = {
      {"p", "2012-10-01 08:00:00", "2012-10-01 08:02:11.2", "1"},
      {"p", "2012-10-01 08:00:00.900", "2012-10-01 08:00:02.100", "0"}};
  const auto r = preprocess_timss(rows, 1);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records[0], (ResponseRecord{"p", 131200, 1.0}));
  EXPECT_EQ(r.records[1], (ResponseRecord{"p", 1200, 0.0}));
}

TEST(PreprocessTimss, ThresholdBoundary) {
  auto rows = timss_rows("keep", 3500, 60'000);
  auto below = timss_rows("drop", 3499, 60'000);
  rows.insert(rows.end(), below.begin(), below.end());
  const auto r = preprocess_timss(rows, 3500);
  EXPECT_EQ(r.records.size(), 3500u);
  for (const auto& rec : r.records) EXPECT_EQ(rec.problem_id, "keep");
  EXPECT_EQ(r.report.problems_retained, 1u);
  EXPECT_EQ(r.report.problems_filtered_below_threshold, 1u);
}

TEST(PreprocessTimss, InvalidRowsDroppedAndCounted) {
  std::vector<TimssRawRow> rows = {
      {"p", "2012-10-01 08:00:00", "garbage", "1"},
      {"p", "", "2012-10-01 08:00:05", "1"},
      {"p", "2012-10-01 08:00:05", "2012-10-01 08:00:00", "1"},  // end before start
      {"p", "2012-10-01 08:00:00", "2012-10-01 08:00:00", "1"},  // zero duration
      {"p", "2012-10-01 08:00:00", "2012-10-01 08:00:05", "yes"},
      {"p", "2012-10-01 08:00:00", "2012-10-01 08:00:05", "2"},
      {"p", "2012-10-01 08:00:00", "2012-10-01 08:00:05", "1"}};
  const auto r = preprocess_timss(rows, 1);
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.report.rows_read, 7u);
  EXPECT_EQ(r.report.rows_dropped_invalid, 6u);
  EXPECT_THROW(preprocess_timss(rows, 0), InputError);
}

TEST(PreprocessTimss, FixtureNeverKeepsSmallProblems) {
  const auto fx = testing::timss_fixture();
  std::istringstream in(fx.csv);
  const auto rows = load_timss_csv(in);
  EXPECT_EQ(rows.size(), fx.rows);
  for (std::size_t threshold : {1u, 1000u, 3500u, 4000u}) {
    const auto r = preprocess_timss(rows, threshold);
    std::map<std::string, std::size_t> counts;
    for (const auto& rec : r.records) ++counts[rec.problem_id];
    for (const auto& [id, n] : counts) EXPECT_GE(n, threshold) << id;
    EXPECT_EQ(r.report.rows_dropped_invalid, fx.invalid_rows);
  }
}

TEST(PreprocessTimss, MissingColumnIsSchemaError) {
  std::istringstream in("problem_id,start_time,correct\n1,2,3\n");
  EXPECT_THROW(load_timss_csv(in), SchemaError);
}

TEST(JeeCounts, SchemesShiftAsExpected) {
  const auto a = shift_marks(jee_marking_scheme(JeeScheme::plus3_minus1));
  EXPECT_EQ(a.outcome_marks.at("correct"), 4.0);
  EXPECT_EQ(a.outcome_marks.at("incorrect"), 0.0);
  EXPECT_EQ(a.outcome_marks.at("unattempted"), 1.0);
  const auto b = shift_marks(jee_marking_scheme(JeeScheme::plus4_zero));
  EXPECT_EQ(b.outcome_marks.at("correct"), 4.0);
  EXPECT_EQ(b.outcome_marks.at("incorrect"), 0.0);
}

TEST(ExpandJeeCounts, ExpansionByDefinition) {
  const JeeQuestionCounts q{"Q1", 2, 1, 1, JeeScheme::plus3_minus1};
  const auto scheme = shift_marks(jee_marking_scheme(q.scheme));
  const auto recs = expand_jee_counts(q, scheme, 60000);
  ASSERT_EQ(recs.size(), 4u);
  std::vector<double> marks;
  for (const auto& r : recs) {
    marks.push_back(r.marks);
    EXPECT_EQ(r.time_ms, 60000);
    EXPECT_EQ(r.problem_id, "Q1");
  }
  EXPECT_EQ(marks, (std::vector<double>{4, 4, 0, 1}));
}

TEST(ExpandJeeCounts, EmptyAndErrors) {
  const auto scheme = shift_marks(jee_marking_scheme(JeeScheme::plus4_zero));
  EXPECT_TRUE(expand_jee_counts({"Q9", 0, 0, 0, JeeScheme::plus4_zero}, scheme, 10).empty());
  EXPECT_THROW(expand_jee_counts({"Q9", -1, 0, 0, JeeScheme::plus4_zero}, scheme, 10), InputError);
  EXPECT_THROW(expand_jee_counts({"Q9", 1, 0, 0, JeeScheme::plus4_zero}, scheme, 0), InputError);
  EXPECT_THROW(expand_jee_counts({"Q1", 1, 1, 0, JeeScheme::plus3_minus1},
                                 jee_marking_scheme(JeeScheme::plus3_minus1), 10),
               DomainError);
}

TEST(ExpandJeeCounts, LengthIsSumOfCountsProperty) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> c(0, 400);
  const auto scheme = shift_marks(jee_marking_scheme(JeeScheme::plus3_minus1));
  for (int trial = 0; trial < 200; ++trial) {
    const JeeQuestionCounts q{"Q", c(rng), c(rng), c(rng), JeeScheme::plus3_minus1};
    EXPECT_EQ(static_cast<std::int64_t>(expand_jee_counts(q, scheme, 1000).size()), q.total());
  }
}

TEST(ExpandJeeCounts, FullExamScaleCount) {
  // 14 usable questions, every candidate counted once per question.
  constexpr std::int64_t kCandidates = 180200;
  std::int64_t total = 0;
  for (int q = 0; q < 14; ++q) {
    const auto label = (q < 8) ? JeeScheme::plus3_minus1 : JeeScheme::plus4_zero;
    const std::int64_t correct = 20000 + 5000 * q;
    const std::int64_t incorrect = 30000 + 1000 * q;
    const JeeQuestionCounts counts{"Q" + std::to_string(q + 1), correct, incorrect,
                                   kCandidates - correct - incorrect, label};
    total += static_cast<std::int64_t>(
        expand_jee_counts(counts, shift_marks(jee_marking_scheme(label)), 771428).size());
  }
  EXPECT_EQ(total, 2'522'800);
}

TEST(LoadJeeCounts, ParsesAndDropsInvalid) {
  std::istringstream in(
      "question_id,correct,incorrect,unattempted,scheme\n"
      "Q1,10,5,3,plus3_minus1\n"
      "Q8,7,2,1,plus4_zero\n"
      "Q5,1,1,1,partial\n"
      "Q6,-1,1,1,plus4_zero\n");
  IngestReport report;
  const auto q = load_jee_counts(in, &report);
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0].question_id, "Q1");
  EXPECT_EQ(q[0].scheme, JeeScheme::plus3_minus1);
  EXPECT_EQ(q[1].total(), 10);
  EXPECT_EQ(report.rows_read, 4u);
  EXPECT_EQ(report.rows_dropped_invalid, 2u);
}

}  // namespace
}  // namespace apme
