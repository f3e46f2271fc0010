#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsmc/stat.hpp"

namespace nsmc {

inline constexpr int kSchemaVersion = 1;
inline constexpr int kDefaultResolution = 1000;

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- histogram -----------------------------------------------------------------

struct Histogram {
  double origin = 0.0;
  double width = 1.0;
  std::vector<std::int64_t> counts;
  std::int64_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;

  double bucket_lo(std::size_t i) const { return origin + static_cast<double>(i) * width; }
  double bucket_hi(std::size_t i) const { return origin + static_cast<double>(i + 1) * width; }
  /// Density estimate for bucket i.
  double pdf(std::size_t i) const {
    return static_cast<double>(counts[i]) / (static_cast<double>(n) * width);
  }

  bool operator==(const Histogram&) const = default;
};

namespace detail {

inline Histogram fill_histogram(std::span<const double> values, double origin, double width,
                                std::size_t buckets) {
  Histogram h;
  h.origin = origin;
  h.width = width;
  h.counts.assign(buckets, 0);
  for (double v : values) {
    auto i = static_cast<std::int64_t>(std::floor((v - origin) / width));
    i = std::clamp<std::int64_t>(i, 0, static_cast<std::int64_t>(buckets) - 1);
    ++h.counts[static_cast<std::size_t>(i)];
  }
  h.n = static_cast<std::int64_t>(values.size());
  const auto m = moments(values);
  h.mean = m.mean;
  h.stddev = m.stddev;
  return h;
}

inline void check_values(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("histogram of an empty sample");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("histogram values must be finite");
}

}  // namespace detail

/// `buckets` equal buckets spanning [min, max]; the maximum lands in the last one.
inline Histogram histogram_by_count(std::span<const double> values, std::size_t buckets) {
  detail::check_values(values);
  if (buckets < 1) throw std::invalid_argument("bucket count must be positive");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double width = (*hi - *lo) / static_cast<double>(buckets);
  if (!(width > 0.0)) {
    width = 1.0;
    buckets = 1;
  }
  return detail::fill_histogram(values, *lo, width, buckets);
}

/// Buckets of the given width aligned to multiples of it.
inline Histogram histogram_by_width(std::span<const double> values, double width) {
  detail::check_values(values);
  if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("bucket width must be positive");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double origin = std::floor(*lo / width) * width;
  const double span = std::floor((*hi - origin) / width);
  if (span > 1e7) throw std::invalid_argument("bucket width too small for the value range");
  return detail::fill_histogram(values, origin, width, static_cast<std::size_t>(span) + 1);
}

// ---- cumulative distribution ---------------------------------------------------

struct CdfPoint {
  double value = 0.0;
  double cdf = 0.0;
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const CdfPoint&) const = default;
};

struct DistributionSeries {
  double alpha = 0.05;
  std::int64_t n = 0;
  std::vector<CdfPoint> points;  // one per distinct value, ascending

  bool operator==(const DistributionSeries&) const = default;
};

inline DistributionSeries build_cdf(std::span<const double> values, double alpha) {
  if (values.empty()) throw std::invalid_argument("distribution of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  DistributionSeries d;
  d.alpha = alpha;
  d.n = static_cast<std::int64_t>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    const auto k = static_cast<std::int64_t>(i + 1);
    const auto ci = clopper_pearson(k, d.n, alpha);
    d.points.push_back({sorted[i], static_cast<double>(k) / static_cast<double>(d.n), ci.lo, ci.hi});
  }
  return d;
}

// ---- trajectories --------------------------------------------------------------

struct TrajectoryPoint {
  double t = 0.0;
  double v = 0.0;

  bool operator==(const TrajectoryPoint&) const = default;
};

struct TrajectorySeries {
  std::string expr;
  int run = 0;
  int resolution = kDefaultResolution;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<TrajectoryPoint> points;

  bool operator==(const TrajectorySeries&) const = default;
};

/// Streaming decimation over R equal time cells of [t_begin, t_end]. Each cell
/// keeps its first, lowest, highest and last point, so value extrema survive
/// and at most 4R points are emitted. Filtering the output again with the same
/// parameters returns it unchanged.
class TrajectoryFilter {
 public:
  TrajectoryFilter(int resolution, double t_begin, double t_end)
      : r_(resolution), t0_(t_begin), t1_(t_end) {
    if (resolution < 1) throw std::invalid_argument("resolution must be positive");
    if (!(t_end >= t_begin)) throw std::invalid_argument("trajectory time range is empty");
  }

  void push(double t, double v, std::vector<TrajectoryPoint>& out) {
    const std::int64_t c = cell(t);
    if (open_ && c != cur_) flush(out);
    const Kept p{{t, v}, seq_++};
    if (!open_) {
      open_ = true;
      cur_ = c;
      first_ = lo_ = hi_ = last_ = p;
      return;
    }
    if (v < lo_.p.v) lo_ = p;
    if (v > hi_.p.v) hi_ = p;
    last_ = p;
  }

  void finish(std::vector<TrajectoryPoint>& out) {
    if (open_) flush(out);
  }

 private:
  struct Kept {
    TrajectoryPoint p;
    std::uint64_t seq = 0;
  };

  std::int64_t cell(double t) const {
    if (t1_ <= t0_) return 0;
    const auto c = static_cast<std::int64_t>(std::floor((t - t0_) / (t1_ - t0_) * r_));
    return std::clamp<std::int64_t>(c, 0, r_ - 1);
  }

  // Emits the cell's kept points in arrival order, each raw point once.
  void flush(std::vector<TrajectoryPoint>& out) {
    Kept pts[4] = {first_, lo_, hi_, last_};
    std::sort(std::begin(pts), std::end(pts), [](const Kept& a, const Kept& b) { return a.seq < b.seq; });
    for (int i = 0; i < 4; ++i)
      if (i == 0 || pts[i].seq != pts[i - 1].seq) out.push_back(pts[i].p);
    open_ = false;
  }

  int r_;
  double t0_, t1_;
  bool open_ = false;
  std::int64_t cur_ = 0;
  std::uint64_t seq_ = 0;
  Kept first_, lo_, hi_, last_;
};

inline std::vector<TrajectoryPoint> filter_trajectory(std::span<const TrajectoryPoint> points, int resolution,
                                                      double t_begin, double t_end) {
  TrajectoryFilter f(resolution, t_begin, t_end);
  std::vector<TrajectoryPoint> out;
  for (const auto& p : points) f.push(p.t, p.v, out);
  f.finish(out);
  return out;
}

/// Time range taken from the first and last points.
inline std::vector<TrajectoryPoint> filter_trajectory(std::span<const TrajectoryPoint> points, int resolution) {
  if (points.empty()) return {};
  return filter_trajectory(points, resolution, points.front().t, points.back().t);
}

// ---- number formatting ---------------------------------------------------------

namespace detail {

inline std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_num(const std::string& s) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw OutputError("bad number '" + s + "'");
  return v;
}

/// Quotes a field that contains a comma or a double quote.
inline std::string csv_field(const std::string& f) {
  if (f.find_first_of(",\"") == std::string::npos) return f;
  std::string q = "\"";
  for (char c : f) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> f;
  std::size_t i = 0;
  for (;;) {
    const auto j = line.find(',', i);
    f.push_back(line.substr(i, j == std::string::npos ? std::string::npos : j - i));
    if (j == std::string::npos) break;
    i = j + 1;
  }
  return f;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& text, const std::string& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw OutputError("expected CSV header '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(split_csv(line));
  return rows;
}

inline void expect_schema(const nlohmann::json& j, const char* kind) {
  if (!j.is_object() || j.value("schema_version", 0) != kSchemaVersion)
    throw OutputError("unsupported schema_version");
  if (j.value("kind", "") != kind) throw OutputError(std::string("expected a ") + kind + " document");
}

}  // namespace detail

// ---- CSV -----------------------------------------------------------------------

inline std::string to_csv(const Histogram& h) {
  std::string s = "bucket_lo,bucket_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    s += detail::num(h.bucket_lo(i)) + "," + detail::num(h.bucket_hi(i)) + "," + std::to_string(h.counts[i]) + "\n";
  return s;
}

inline std::string to_csv(const DistributionSeries& d) {
  std::string s = "value,cdf,ci_lo,ci_hi\n";
  for (const auto& p : d.points)
    s += detail::num(p.value) + "," + detail::num(p.cdf) + "," + detail::num(p.lo) + "," + detail::num(p.hi) + "\n";
  return s;
}

inline std::string to_csv(const std::vector<TrajectorySeries>& series) {
  std::string s = "run,expr,t,value\n";
  for (const auto& tr : series) {
    const std::string expr = detail::csv_field(tr.expr);
    for (const auto& p : tr.points)
      s += std::to_string(tr.run) + "," + expr + "," + detail::num(p.t) + "," + detail::num(p.v) + "\n";
  }
  return s;
}

/// Bucket table of a histogram CSV; (bucket_lo, bucket_hi, count) per row.
struct BucketRow {
  double lo, hi;
  std::int64_t count;
  bool operator==(const BucketRow&) const = default;
};

inline std::vector<BucketRow> bucket_rows(const Histogram& h) {
  std::vector<BucketRow> rows;
  for (std::size_t i = 0; i < h.counts.size(); ++i) rows.push_back({h.bucket_lo(i), h.bucket_hi(i), h.counts[i]});
  return rows;
}

inline std::vector<BucketRow> histogram_rows_from_csv(const std::string& text) {
  std::vector<BucketRow> rows;
  for (const auto& f : detail::read_csv(text, "bucket_lo,bucket_hi,count")) {
    if (f.size() != 3) throw OutputError("histogram CSV rows need 3 fields");
    rows.push_back({detail::parse_num(f[0]), detail::parse_num(f[1]), std::stoll(f[2])});
  }
  return rows;
}

inline DistributionSeries cdf_from_csv(const std::string& text, double alpha) {
  DistributionSeries d;
  d.alpha = alpha;
  for (const auto& f : detail::read_csv(text, "value,cdf,ci_lo,ci_hi")) {
    if (f.size() != 4) throw OutputError("CDF CSV rows need 4 fields");
    d.points.push_back({detail::parse_num(f[0]), detail::parse_num(f[1]), detail::parse_num(f[2]),
                        detail::parse_num(f[3])});
  }
  return d;
}

// ---- JSON ----------------------------------------------------------------------

inline nlohmann::json to_json(const Histogram& h) {
  return {{"schema_version", kSchemaVersion}, {"kind", "histogram"}, {"origin", h.origin},
          {"width", h.width},                 {"counts", h.counts},  {"n", h.n},
          {"mean", h.mean},                   {"stddev", h.stddev}};
}

inline nlohmann::json to_json(const DistributionSeries& d) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : d.points) pts.push_back({p.value, p.cdf, p.lo, p.hi});
  return {{"schema_version", kSchemaVersion}, {"kind", "cdf"}, {"alpha", d.alpha}, {"n", d.n}, {"points", pts}};
}

inline nlohmann::json to_json(const TrajectorySeries& t) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : t.points) pts.push_back({p.t, p.v});
  return {{"schema_version", kSchemaVersion}, {"kind", "trajectory"}, {"expr", t.expr},
          {"run", t.run},                     {"resolution", t.resolution}, {"t_begin", t.t_begin},
          {"t_end", t.t_end},                 {"points", pts}};
}

inline nlohmann::json to_json(const std::vector<TrajectorySeries>& series) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : series) arr.push_back(to_json(t));
  return {{"schema_version", kSchemaVersion}, {"kind", "trajectories"}, {"series", arr}};
}

inline Histogram histogram_from_json(const nlohmann::json& j) {
  detail::expect_schema(j, "histogram");
  Histogram h;
  h.origin = j.at("origin").get<double>();
  h.width = j.at("width").get<double>();
  h.counts = j.at("counts").get<std::vector<std::int64_t>>();
  h.n = j.at("n").get<std::int64_t>();
  h.mean = j.at("mean").get<double>();
  h.stddev = j.at("stddev").get<double>();
  return h;
}

inline DistributionSeries cdf_from_json(const nlohmann::json& j) {
  detail::expect_schema(j, "cdf");
  DistributionSeries d;
  d.alpha = j.at("alpha").get<double>();
  d.n = j.at("n").get<std::int64_t>();
  for (const auto& p : j.at("points"))
    d.points.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>(), p.at(3).get<double>()});
  return d;
}

inline TrajectorySeries trajectory_from_json(const nlohmann::json& j) {
  detail::expect_schema(j, "trajectory");
  TrajectorySeries t;
  t.expr = j.at("expr").get<std::string>();
  t.run = j.at("run").get<int>();
  t.resolution = j.at("resolution").get<int>();
  t.t_begin = j.at("t_begin").get<double>();
  t.t_end = j.at("t_end").get<double>();
  for (const auto& p : j.at("points")) t.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return t;
}

inline std::vector<TrajectorySeries> trajectories_from_json(const nlohmann::json& j) {
  detail::expect_schema(j, "trajectories");
  std::vector<TrajectorySeries> out;
  for (const auto& s : j.at("series")) out.push_back(trajectory_from_json(s));
  return out;
}

// ---- files ---------------------------------------------------------------------

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("cannot open '" + path + "' for writing");
  out << content;
  if (!out.flush()) throw OutputError("write to '" + path + "' failed");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw OutputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace nsmc
