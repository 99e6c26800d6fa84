#pragma once

// Deterministic fixtures shared by the unit and acceptance suites.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "apme/metrics.hpp"

namespace apme::testing {

// Independent two-pass mean / sample standard deviation.
struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd two_pass(const std::vector<double>& xs) {
  long double sum = 0.0L;
  for (double x : xs) sum += x;
  const long double mean = sum / static_cast<long double>(xs.size());
  long double ss = 0.0L;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {static_cast<double>(mean),
          static_cast<double>(std::sqrt(ss / static_cast<long double>(xs.size() - 1)))};
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// ---------------------------------------------------------------------------
// SKYBEN-shaped fixture: 10 problems A..J, 200 solvers, 5 marks for a correct
// answer and 0 otherwise. Per-problem eta moments are pinned to reference
// values for A, C, H and J; the remaining problems sit in between.

struct TargetMoments {
  std::string id;
  double mean;
  double sd;
};

inline const std::vector<TargetMoments>& skyben_targets() {
  static const std::vector<TargetMoments> targets = {
      {"A", 6.94, 2.16}, {"B", 5.80, 2.30}, {"C", 4.39, 2.84}, {"D", 3.60, 2.60},
      {"E", 2.90, 2.50}, {"F", 2.10, 2.20}, {"G", 1.40, 1.90}, {"H", 0.71, 1.42},
      {"I", 0.60, 1.30}, {"J", 0.49, 1.17}};
  return targets;
}

inline MarkingScheme skyben_scheme() {
  MarkingScheme s;
  s.alpha = 1.0;
  s.outcome_marks = {{"correct", 5.0}, {"incorrect", 0.0}};
  s.time_unit_divisor = 1000.0;
  return s;
}

// Records for one problem whose eta values (5000 / t_ms for correct answers,
// 0 otherwise) have the requested mean and sample sd up to millisecond
// rounding of the times.
inline std::vector<ResponseRecord> moments_problem(const std::string& id, double mean, double sd,
                                                   std::size_t n = 200) {
  const double nd = static_cast<double>(n);
  const double sum_sq = (nd - 1.0) * sd * sd + nd * mean * mean;
  for (std::size_t c = n; c >= 2; --c) {
    const double cd = static_cast<double>(c);
    const double a = nd * mean / cd;
    const double var = sum_sq / cd - a * a;
    if (var < 0.0) continue;
    // Evenly spaced grid standardized to population mean 0, sd 1.
    std::vector<double> z(c);
    double zz = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      z[j] = static_cast<double>(j) - (cd - 1.0) / 2.0;
      zz += z[j] * z[j];
    }
    const double zsd = std::sqrt(zz / cd);
    const double spread = std::sqrt(var);
    if (a - spread * (z.back() / zsd) < 0.2) continue;

    std::vector<ResponseRecord> out;
    for (std::size_t j = 0; j < c; ++j) {
      const double x = a + spread * z[j] / zsd;
      out.push_back({id, std::llround(5000.0 / x), 5.0});
    }
    for (std::size_t j = c; j < n; ++j)
      out.push_back({id, 30000 + static_cast<std::int64_t>(37 * j), 0.0});
    return out;
  }
  return {};
}

inline std::vector<ResponseRecord> skyben_fixture() {
  std::vector<std::vector<ResponseRecord>> per_problem;
  for (const auto& t : skyben_targets()) per_problem.push_back(moments_problem(t.id, t.mean, t.sd));
  // Solver-major order, as an attempt log would be.
  std::vector<ResponseRecord> records;
  for (std::size_t s = 0; s < per_problem.front().size(); ++s)
    for (const auto& p : per_problem) records.push_back(p[s]);
  return records;
}

// ---------------------------------------------------------------------------
// Temporary directories

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 gen(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("apme_" + tag + "_" + std::to_string(gen() % 1000000000ULL));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// TIMSS raw fixture

inline std::string iso_timestamp(std::int64_t epoch_ms, bool t_separator, bool zulu) {
  using namespace std::chrono;
  const auto days = static_cast<int>(epoch_ms / 86'400'000);
  const std::int64_t rem = epoch_ms % 86'400'000;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u%c%02d:%02d:%02d.%03d%s", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), t_separator ? 'T' : ' ',
                static_cast<int>(rem / 3'600'000), static_cast<int>(rem / 60'000 % 60),
                static_cast<int>(rem / 1000 % 60), static_cast<int>(rem % 1000), zulu ? "Z" : "");
  return buf;
}

struct TimssFixture {
  std::string csv;
  std::vector<std::string> expected_problems;  // retained at threshold 3500, in first-seen order
  std::vector<ResponseRecord> expected_records;
  std::size_t rows = 0;
  std::size_t invalid_rows = 0;
  std::size_t problems = 0;
};

// 30 problems. Valid-row counts straddle 3500: problem 0 has exactly 3500,
// problem 1 has 3499, problem 2 has 3500 rows of which one has a broken
// end time, problem 3 has 3501 plus assorted invalid rows.
inline TimssFixture timss_fixture() {
  constexpr std::size_t kThreshold = 3500;
  std::vector<std::size_t> valid(30);
  std::vector<std::size_t> broken(30, 0);
  valid[0] = 3500;
  valid[1] = 3499;
  valid[2] = 3499;
  broken[2] = 1;
  valid[3] = 3501;
  broken[3] = 6;
  for (std::size_t i = 4; i < 30; ++i) {
    valid[i] = (i % 3 == 0) ? 3600 + 10 * i : 900 + 50 * i;
    broken[i] = i % 4;
  }

  static const char* kBad[] = {"not-a-time", "", "2013-13-01 10:00:00", "2013-02-30 10:00:00",
                               "2013-02-01 25:00:00", "2013-02-01T10:00"};

  TimssFixture fx;
  fx.problems = 30;
  std::ostringstream out;
  out << "row_id,problem_id,start_time,end_time,correct,school\n";
  std::vector<std::vector<ResponseRecord>> kept(30);
  const std::int64_t base = 1'348'700'000'000LL;  // 2012-09-26
  std::size_t row_id = 0;
  for (std::size_t i = 0; i < 30; ++i) {
    const std::string id = std::to_string(416000 + 37 * i);
    std::size_t bad_left = broken[i];
    auto emit = [&](const std::string& start_s, const std::string& end_s, int correct) {
      out << row_id << ',' << id << ',' << start_s << ',' << end_s << ',' << correct << ",S"
          << i % 4 << '\n';
      ++row_id;
      ++fx.rows;
    };
    for (std::size_t j = 0; j < valid[i]; ++j) {
      const std::int64_t start = base + static_cast<std::int64_t>(row_id) * 61'007;
      const bool t_sep = (j % 5) == 0;
      const bool zulu = (j % 7) == 0;
      if (bad_left > 0 && j % 97 == 13) {
        const std::size_t kind = (row_id + bad_left) % 8;
        std::string start_s = iso_timestamp(start, t_sep, zulu);
        std::string end_s = iso_timestamp(start + 4000, t_sep, zulu);
        if (kind < 6)
          end_s = kBad[kind];
        else if (kind == 6)
          end_s = iso_timestamp(start - 5000, t_sep, zulu);  // ends before it starts
        else
          start_s.clear();
        emit(start_s, end_s, 1);
        --bad_left;
        ++fx.invalid_rows;
      }
      const std::int64_t vstart = base + static_cast<std::int64_t>(row_id) * 61'007;
      const std::int64_t dur = 1000 + static_cast<std::int64_t>((i * 7919 + j * 104729) % 400'000);
      const int correct = static_cast<int>((i + j) % 3 != 0);
      kept[i].push_back({id, dur, static_cast<double>(correct)});
      emit(iso_timestamp(vstart, t_sep, zulu), iso_timestamp(vstart + dur, t_sep, zulu), correct);
    }
    while (bad_left > 0) {
      emit("2012-10-01 10:00:00", "garbage", 1);
      ++fx.invalid_rows;
      --bad_left;
    }
  }
  for (std::size_t i = 0; i < 30; ++i) {
    if (kept[i].size() >= kThreshold) {
      fx.expected_problems.push_back(kept[i].front().problem_id);
      fx.expected_records.insert(fx.expected_records.end(), kept[i].begin(), kept[i].end());
    }
  }
  fx.csv = out.str();
  return fx;
}

}  // namespace apme::testing
