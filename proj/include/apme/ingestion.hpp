#pragma once

// Loaders for the canonical record CSV and the three source layouts
// (SKYBEN attempt logs, TIMSS raw timestamps, JEE question-wise counts).

#include <chrono>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "apme/csv.hpp"
#include "apme/error.hpp"
#include "apme/metrics.hpp"

namespace apme {

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped_invalid = 0;
  std::size_t problems_retained = 0;
  std::size_t problems_filtered_below_threshold = 0;
};

struct IngestResult {
  std::vector<ResponseRecord> records;
  IngestReport report;
};

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::size_t count_problems(std::span<const ResponseRecord> records) {
  std::unordered_map<std::string_view, bool> seen;
  for (const auto& r : records) seen.try_emplace(r.problem_id, true);
  return seen.size();
}

// Shared body of the canonical and SKYBEN loaders.
inline IngestResult read_records(std::istream& in, const csv::Header& header,
                                 const std::string& time_column) {
  const std::size_t id_col = header.at("problem_id");
  const std::size_t time_col = header.at(time_column);
  const std::size_t marks_col = header.at("marks");

  IngestResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++result.report.rows_read;
    const auto row = csv::split_line(line);
    const auto id = csv::trim(csv::field_or_empty(row, id_col));
    const auto time = csv::parse_int(csv::field_or_empty(row, time_col));
    const auto marks = csv::parse_double(csv::field_or_empty(row, marks_col));
    if (id.empty() || !time || *time <= 0 || !marks) {
      ++result.report.rows_dropped_invalid;
      continue;
    }
    result.records.push_back({std::string(id), *time, *marks});
  }
  result.report.problems_retained = count_problems(result.records);
  return result;
}

}  // namespace detail

// Canonical layout: problem_id,milsec,marks (extra columns ignored).
inline IngestResult load_generic_csv(std::istream& in) {
  return detail::read_records(in, csv::read_header(in), "milsec");
}

inline IngestResult load_generic_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return load_generic_csv(in);
}

// SKYBEN attempt log: student_id,problem_id,time_ms,marks. A `milsec`
// column is accepted in place of `time_ms`.
inline IngestResult load_skyben_csv(std::istream& in) {
  const csv::Header header = csv::read_header(in);
  return detail::read_records(in, header, header.has("time_ms") ? "time_ms" : "milsec");
}

inline IngestResult load_skyben_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return load_skyben_csv(in);
}

inline void write_canonical_csv(std::span<const ResponseRecord> records, std::ostream& out) {
  out << "problem_id,milsec,marks\n";
  for (const auto& r : records) {
    out << csv::escape(r.problem_id) << ',' << r.time_ms << ',' << csv::format_double(r.marks)
        << '\n';
  }
}

inline void write_canonical_csv(std::span<const ResponseRecord> records,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_canonical_csv(records, out);
  if (!out) throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// TIMSS

struct TimssRawRow {
  std::string problem_id;
  std::string start_time;
  std::string end_time;
  std::string correct;
};

namespace detail {

inline bool parse_fixed_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

// ISO 8601 date-time to microseconds since the Unix epoch. Accepts a 'T' or
// space separator, optional fractional seconds, and an optional 'Z' or
// +HH:MM / +HHMM offset. Values without an offset are taken as UTC.
inline std::optional<std::int64_t> parse_timestamp_us(std::string_view s) {
  using namespace std::chrono;
  s = csv::trim(s);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (s.size() < 19) return std::nullopt;
  if (!detail::parse_fixed_digits(s, 0, 4, y) || s[4] != '-' ||
      !detail::parse_fixed_digits(s, 5, 2, mo) || s[7] != '-' ||
      !detail::parse_fixed_digits(s, 8, 2, d) || (s[10] != 'T' && s[10] != ' ') ||
      !detail::parse_fixed_digits(s, 11, 2, h) || s[13] != ':' ||
      !detail::parse_fixed_digits(s, 14, 2, mi) || s[16] != ':' ||
      !detail::parse_fixed_digits(s, 17, 2, sec))
    return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;

  std::size_t pos = 19;
  std::int64_t micros = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 6) micros = micros * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (int i = digits; i < 6; ++i) micros *= 10;
  }

  std::int64_t offset_minutes = 0;
  if (pos < s.size()) {
    const char sign = s[pos];
    if (sign == 'Z' && pos + 1 == s.size()) {
      pos = s.size();
    } else if (sign == '+' || sign == '-') {
      int oh = 0, om = 0;
      std::string_view tz = s.substr(pos + 1);
      if (tz.size() == 5 && tz[2] == ':') {
        if (!detail::parse_fixed_digits(tz, 0, 2, oh) || !detail::parse_fixed_digits(tz, 3, 2, om))
          return std::nullopt;
      } else if (tz.size() == 4) {
        if (!detail::parse_fixed_digits(tz, 0, 2, oh) || !detail::parse_fixed_digits(tz, 2, 2, om))
          return std::nullopt;
      } else {
        return std::nullopt;
      }
      if (oh > 23 || om > 59) return std::nullopt;
      offset_minutes = (sign == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
      return std::nullopt;
    }
  }

  const auto days = sys_days{ymd}.time_since_epoch().count();
  const std::int64_t seconds =
      static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + sec - offset_minutes * 60;
  return seconds * 1'000'000 + micros;
}

// Columns problem_id,start_time,end_time,correct; any others are ignored.
inline std::vector<TimssRawRow> load_timss_csv(std::istream& in) {
  const csv::Header header = csv::read_header(in);
  const std::size_t id_col = header.at("problem_id");
  const std::size_t start_col = header.at("start_time");
  const std::size_t end_col = header.at("end_time");
  const std::size_t correct_col = header.at("correct");

  std::vector<TimssRawRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split_line(line);
    rows.push_back({std::string(csv::trim(csv::field_or_empty(f, id_col))),
                    std::string(csv::field_or_empty(f, start_col)),
                    std::string(csv::field_or_empty(f, end_col)),
                    std::string(csv::trim(csv::field_or_empty(f, correct_col)))});
  }
  return rows;
}

inline std::vector<TimssRawRow> load_timss_csv(const std::string& path) {
  auto in = detail::open_input(path);
  return load_timss_csv(in);
}

// Drops rows with missing/invalid timestamps, non-positive durations or a
// correctness flag other than 0/1, converts durations to whole milliseconds
// (truncated), then keeps only problems with at least `min_responses`
// retained rows. Output preserves input row order.
inline IngestResult preprocess_timss(std::span<const TimssRawRow> rows, std::size_t min_responses) {
  if (min_responses < 1) throw InputError("preprocess_timss: min_responses must be >= 1");

  IngestResult result;
  result.report.rows_read = rows.size();
  std::vector<ResponseRecord> valid;
  valid.reserve(rows.size());
  for (const auto& row : rows) {
    const auto start = parse_timestamp_us(row.start_time);
    const auto end = parse_timestamp_us(row.end_time);
    const auto flag = csv::parse_double(row.correct);
    if (row.problem_id.empty() || !start || !end || *end <= *start || !flag ||
        (*flag != 0.0 && *flag != 1.0)) {
      ++result.report.rows_dropped_invalid;
      continue;
    }
    const std::int64_t milsec = (*end - *start) / 1000;
    if (milsec <= 0) {
      ++result.report.rows_dropped_invalid;
      continue;
    }
    valid.push_back({row.problem_id, milsec, *flag});
  }

  std::unordered_map<std::string, std::size_t> counts;
  std::vector<std::string> order;
  for (const auto& r : valid) {
    if (counts[r.problem_id]++ == 0) order.push_back(r.problem_id);
  }
  for (const auto& id : order) {
    if (counts[id] >= min_responses)
      ++result.report.problems_retained;
    else
      ++result.report.problems_filtered_below_threshold;
  }
  for (auto& r : valid) {
    if (counts[r.problem_id] >= min_responses) result.records.push_back(std::move(r));
  }
  return result;
}

// ---------------------------------------------------------------------------
// JEE

enum class JeeScheme { plus3_minus1, plus4_zero };

inline std::optional<JeeScheme> parse_jee_scheme(std::string_view label) {
  label = csv::trim(label);
  if (label == "plus3_minus1") return JeeScheme::plus3_minus1;
  if (label == "plus4_zero") return JeeScheme::plus4_zero;
  return std::nullopt;
}

// Unshifted rubric for a JEE question class.
inline MarkingScheme jee_marking_scheme(JeeScheme label) {
  MarkingScheme scheme;
  if (label == JeeScheme::plus3_minus1)
    scheme.outcome_marks = {{"correct", 3.0}, {"incorrect", -1.0}, {"unattempted", 0.0}};
  else
    scheme.outcome_marks = {{"correct", 4.0}, {"incorrect", 0.0}, {"unattempted", 0.0}};
  return scheme;
}

struct JeeQuestionCounts {
  std::string question_id;
  std::int64_t correct_count = 0;
  std::int64_t incorrect_count = 0;
  std::int64_t unattempted_count = 0;
  JeeScheme scheme = JeeScheme::plus3_minus1;

  std::int64_t total() const { return correct_count + incorrect_count + unattempted_count; }
};

// Columns question_id,correct,incorrect,unattempted,scheme.
inline std::vector<JeeQuestionCounts> load_jee_counts(std::istream& in, IngestReport* report = nullptr) {
  const csv::Header header = csv::read_header(in);
  const std::size_t id_col = header.at("question_id");
  const std::size_t c_col = header.at("correct");
  const std::size_t i_col = header.at("incorrect");
  const std::size_t u_col = header.at("unattempted");
  const std::size_t s_col = header.at("scheme");

  std::vector<JeeQuestionCounts> out;
  IngestReport local;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++local.rows_read;
    const auto f = csv::split_line(line);
    const auto id = csv::trim(csv::field_or_empty(f, id_col));
    const auto c = csv::parse_int(csv::field_or_empty(f, c_col));
    const auto i = csv::parse_int(csv::field_or_empty(f, i_col));
    const auto u = csv::parse_int(csv::field_or_empty(f, u_col));
    const auto s = parse_jee_scheme(csv::field_or_empty(f, s_col));
    if (id.empty() || !c || !i || !u || !s || *c < 0 || *i < 0 || *u < 0) {
      ++local.rows_dropped_invalid;
      continue;
    }
    out.push_back({std::string(id), *c, *i, *u, *s});
  }
  local.problems_retained = out.size();
  if (report) *report = local;
  return out;
}

inline std::vector<JeeQuestionCounts> load_jee_counts(const std::string& path,
                                                      IngestReport* report = nullptr) {
  auto in = detail::open_input(path);
  return load_jee_counts(in, report);
}

// One record per candidate, correct first, then incorrect, then unattempted,
// all at the same nominal time. The scheme must already be non-negative
// (see shift_marks).
inline std::vector<ResponseRecord> expand_jee_counts(const JeeQuestionCounts& counts,
                                                     const MarkingScheme& scheme,
                                                     std::int64_t nominal_time_ms) {
  if (counts.correct_count < 0 || counts.incorrect_count < 0 || counts.unattempted_count < 0)
    throw InputError("expand_jee_counts: negative count for question '" + counts.question_id + "'");
  if (nominal_time_ms <= 0) throw InputError("expand_jee_counts: nominal time must be positive");

  auto mark_for = [&](const char* outcome) {
    auto it = scheme.outcome_marks.find(outcome);
    if (it == scheme.outcome_marks.end())
      throw InputError(std::string("expand_jee_counts: scheme has no mark for '") + outcome + "'");
    if (it->second < 0.0)
      throw DomainError(std::string("expand_jee_counts: negative mark for '") + outcome +
                        "'; apply shift_marks first");
    return it->second;
  };
  const double correct = mark_for("correct");
  const double incorrect = mark_for("incorrect");
  const double unattempted = mark_for("unattempted");

  std::vector<ResponseRecord> records;
  records.reserve(static_cast<std::size_t>(counts.total()));
  auto emit = [&](std::int64_t n, double marks) {
    for (std::int64_t k = 0; k < n; ++k) records.push_back({counts.question_id, nominal_time_ms, marks});
  };
  emit(counts.correct_count, correct);
  emit(counts.incorrect_count, incorrect);
  emit(counts.unattempted_count, unattempted);
  return records;
}

}  // namespace apme
