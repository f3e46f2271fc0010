#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "filter_check.hpp"
#include "nsmc/output.hpp"
#include "nsmc/parser.hpp"
#include "nsmc/simulate.hpp"

using namespace nsmc;
using nsmc::testing::max_cell_deviation;

namespace {

Network corpus(const std::string& name) {
  return build_network(parse_model(read_file(std::string(NSMC_MODELS_DIR) + "/" + name)));
}

std::vector<TrajectoryPoint> random_walk(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrajectoryPoint> pts;
  pts.reserve(n);
  double v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v += rng.uniform(-1, 1);
    pts.push_back({static_cast<double>(i) / static_cast<double>(n), v});
  }
  return pts;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nsmc_test_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Histogram, ConstantSample) {
  const std::vector<double> v{1, 1, 1};
  const auto h = histogram_by_width(v, 1.0);
  ASSERT_EQ(h.counts.size(), 1u);
  EXPECT_EQ(h.counts[0], 3);
  EXPECT_EQ(h.mean, 1.0);
  EXPECT_EQ(h.stddev, 0.0);
  const auto c = histogram_by_count(v, 10);
  ASSERT_EQ(c.counts.size(), 1u);
  EXPECT_EQ(c.counts[0], 3);
}

TEST(Histogram, UniformBucketsHaveBinomialCounts) {
  Rng rng(1);
  std::vector<double> v;
  for (int i = 0; i < 100000; ++i) v.push_back(rng.uniform());
  const auto h = histogram_by_count(v, 10);
  ASSERT_EQ(h.counts.size(), 10u);
  std::int64_t total = 0;
  for (auto c : h.counts) {
    EXPECT_NEAR(static_cast<double>(c), 1e4, 4 * std::sqrt(1e4 * 0.9));
    total += c;
  }
  EXPECT_EQ(total, h.n);
  double area = 0.0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) area += h.pdf(i) * h.width;
  EXPECT_NEAR(area, 1.0, 1e-12);
}

TEST(Histogram, MomentsMatchTwoPassComputation) {
  Rng rng(2);
  std::vector<double> v;
  for (int i = 0; i < 5000; ++i) v.push_back(rng.exponential(0.3) + 1e3);
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  const auto h = histogram_by_width(v, 0.5);
  EXPECT_NEAR(h.mean, mean, 1e-12 * mean);
  EXPECT_NEAR(h.stddev, sd, 1e-12 * sd);
  EXPECT_EQ(std::fmod(h.origin, 0.5), 0.0);
  EXPECT_LE(h.origin, *std::min_element(v.begin(), v.end()));
}

TEST(Histogram, RaceTimeToT3StaysInSupport) {
  auto net = corpus("race.npta");
  Simulator sim(net);
  Monitor mon(wmtl::from_expr(resolve_in_network(parse_expression("<> T.T3", true), net), net.tau));
  RunBound b;
  b.limit = 10;
  std::vector<double> times;
  for (int i = 0; i < 2000; ++i) {
    Rng rng(run_seed(3, static_cast<std::uint64_t>(i)));
    times.push_back(sim.run(b, &mon, rng).time);
  }
  const auto h = histogram_by_count(times, 20);
  EXPECT_GE(h.origin, 0.0);
  EXPECT_LE(h.bucket_hi(19), 2.0 + 1e-9);
  EXPECT_GT(h.mean, 0.0);
  EXPECT_LT(h.mean, 2.0);
}

TEST(Histogram, RejectsBadInput) {
  EXPECT_THROW(histogram_by_count(std::vector<double>{}, 3), std::invalid_argument);
  EXPECT_THROW(histogram_by_width(std::vector<double>{1.0}, 0.0), std::invalid_argument);
  EXPECT_THROW(histogram_by_width(std::vector<double>{1.0, std::nan("")}, 1.0), std::invalid_argument);
}

TEST(Cdf, SingleValueSteps) {
  const auto d = build_cdf(std::vector<double>{4.0, 4.0}, 0.05);
  ASSERT_EQ(d.points.size(), 1u);
  EXPECT_EQ(d.points[0].value, 4.0);
  EXPECT_EQ(d.points[0].cdf, 1.0);
}

TEST(Cdf, BandMatchesClopperPearson) {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto d = build_cdf(v, 0.05);
  ASSERT_EQ(d.points.size(), 10u);
  EXPECT_NEAR(d.points[4].lo, 0.1871, 1e-3);
  EXPECT_NEAR(d.points[4].hi, 0.8129, 1e-3);
  EXPECT_EQ(d.points.back().cdf, 1.0);
  EXPECT_GE(d.points.front().cdf - d.points.front().lo, 0.0);
}

TEST(Cdf, BandsAreOrderedAndMonotone) {
  Rng rng(4);
  std::vector<double> v;
  for (int i = 0; i < 3000; ++i) v.push_back(std::floor(rng.uniform(0, 50)));
  const auto d = build_cdf(v, 0.01);
  double prev = 0.0;
  for (const auto& p : d.points) {
    EXPECT_LE(0.0, p.lo);
    EXPECT_LE(p.lo, p.cdf);
    EXPECT_LE(p.cdf, p.hi);
    EXPECT_LE(p.hi, 1.0);
    EXPECT_GE(p.cdf, prev);
    prev = p.cdf;
  }
  EXPECT_EQ(prev, 1.0);
}

TEST(Filter, ConstantSeriesIsBounded) {
  std::vector<TrajectoryPoint> pts;
  for (int i = 0; i < 1000000; ++i) pts.push_back({i * 1e-3, 5.0});
  const auto out = filter_trajectory(pts, 100);
  EXPECT_LE(out.size(), 402u);
  EXPECT_EQ(out.front(), pts.front());
  EXPECT_EQ(out.back(), pts.back());
}

TEST(Filter, DistinctCellsAreAllKept) {
  std::vector<TrajectoryPoint> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({static_cast<double>(i), static_cast<double>(i * i % 7)});
  EXPECT_EQ(filter_trajectory(pts, 10), pts);
}

TEST(Filter, KeepsExtremaAndEndpoints) {
  auto pts = random_walk(200000, 5);
  const auto out = filter_trajectory(pts, 50);
  EXPECT_LE(out.size(), 4u * 50 + 2);
  EXPECT_EQ(out.front(), pts.front());
  EXPECT_EQ(out.back(), pts.back());
  auto by_v = [](const TrajectoryPoint& a, const TrajectoryPoint& b) { return a.v < b.v; };
  EXPECT_EQ(std::max_element(out.begin(), out.end(), by_v)->v, std::max_element(pts.begin(), pts.end(), by_v)->v);
  EXPECT_EQ(std::min_element(out.begin(), out.end(), by_v)->v, std::min_element(pts.begin(), pts.end(), by_v)->v);
  for (std::size_t i = 1; i < out.size(); ++i) EXPECT_LE(out[i - 1].t, out[i].t);
}

TEST(Filter, IdempotentAndWithinOneCell) {
  for (std::uint64_t seed : {6u, 7u, 8u}) {
    const auto pts = random_walk(300000, seed);
    const auto once = filter_trajectory(pts, 200);
    EXPECT_EQ(filter_trajectory(once, 200), once);
    EXPECT_LE(max_cell_deviation(pts, once, 200), 1.0);
  }
}

// Plain subsampling drops extrema, so the deviation measure must flag it.
TEST(Filter, DeviationMeasureRejectsSubsampling) {
  const auto pts = random_walk(300000, 12);
  std::vector<TrajectoryPoint> every;
  for (std::size_t i = 0; i < pts.size(); i += 400) every.push_back(pts[i]);
  every.push_back(pts.back());
  EXPECT_GT(max_cell_deviation(pts, every, 200), 1.0);
}

TEST(Filter, SinCosTrajectoryWithinOneCell) {
  auto net = corpus("sincos.npta");
  Simulator sim(net);
  TraceRecorder rec;
  RunBound b;
  b.limit = 12;
  Rng rng(9);
  sim.run(b, nullptr, rng, &rec);
  const int s = net.find_clock("sin_t");
  std::vector<TrajectoryPoint> raw;
  for (const auto& p : rec.points) raw.push_back({p.time, p.clocks[static_cast<std::size_t>(s)]});
  const auto out = filter_trajectory(raw, 500);
  EXPECT_GT(raw.size(), 10000u);
  EXPECT_LE(out.size(), 2002u);
  EXPECT_LE(max_cell_deviation(raw, out, 500), 1.0);
}

TEST(Filter, StreamingMatchesSimulateOutput) {
  auto net = corpus("sincos.npta");
  auto q = resolve_query(parse_query("simulate 2 [<=12]{sin_t, cos_t}"), net);
  const auto series = simulate_trajectories(net, q, 21, 300);
  ASSERT_EQ(series.size(), 4u);
  EXPECT_EQ(series[0].expr, "sin_t");
  EXPECT_EQ(series[1].expr, "cos_t");
  EXPECT_EQ(series[2].run, 1);
  for (const auto& s : series) {
    EXPECT_LE(s.points.size(), 1202u);
    EXPECT_DOUBLE_EQ(s.points.back().t, 12.0);
    EXPECT_EQ(filter_trajectory(s.points, 300, s.t_begin, s.t_end), s.points);
  }
}

TEST(Filter, RejectsBadParameters) {
  EXPECT_THROW(TrajectoryFilter(0, 0, 1), std::invalid_argument);
  EXPECT_THROW(TrajectoryFilter(10, 2, 1), std::invalid_argument);
}

TEST(Export, HistogramCsvAndJson) {
  Rng rng(10);
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(rng.uniform(0, 3));
  const auto h = histogram_by_count(v, 7);
  const auto csv = to_csv(h);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bucket_lo,bucket_hi,count");
  EXPECT_EQ(histogram_rows_from_csv(csv), bucket_rows(h));
  EXPECT_EQ(histogram_from_json(nlohmann::json::parse(to_json(h).dump())), h);
}

TEST(Export, CdfCsvAndJson) {
  Rng rng(11);
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(rng.exponential(2.0));
  const auto d = build_cdf(v, 0.05);
  auto from_csv = cdf_from_csv(to_csv(d), 0.05);
  from_csv.n = d.n;
  EXPECT_EQ(from_csv, d);
  EXPECT_EQ(cdf_from_json(nlohmann::json::parse(to_json(d).dump())), d);
}

TEST(Export, TrajectoryJsonRoundTripsThroughFile) {
  auto net = corpus("oscillator.npta");
  auto q = resolve_query(parse_query("simulate 1 [<=5]{A, B}"), net);
  const auto series = simulate_trajectories(net, q, 3, 100);
  const auto j = to_json(series.front());
  EXPECT_EQ(j.at("kind"), "trajectory");
  EXPECT_EQ(j.at("expr"), "A");
  EXPECT_EQ(j.at("resolution"), 100);
  const auto path = temp_path("traj.json");
  write_file(path.string(), to_json(series).dump());
  EXPECT_EQ(trajectories_from_json(nlohmann::json::parse(read_file(path.string()))), series);
  std::filesystem::remove(path);
}

TEST(Export, TrajectoryCsvQuotesExpressions) {
  TrajectorySeries s;
  s.expr = "max(a, b)";
  s.points = {{0.0, 1.0}};
  EXPECT_EQ(to_csv(std::vector<TrajectorySeries>{s}), "run,expr,t,value\n0,\"max(a, b)\",0,1\n");
}

TEST(Export, SchemaAndIoErrors) {
  EXPECT_THROW(histogram_from_json(nlohmann::json{{"schema_version", 2}, {"kind", "histogram"}}), OutputError);
  EXPECT_THROW(cdf_from_json(to_json(histogram_by_width(std::vector<double>{1.0}, 1.0))), OutputError);
  EXPECT_THROW(histogram_rows_from_csv("value,cdf\n"), OutputError);
  EXPECT_THROW(cdf_from_csv("value,cdf,ci_lo,ci_hi\n1,x,0,1\n", 0.05), OutputError);
  try {
    read_file("/nonexistent/dir/file.npta");
    FAIL();
  } catch (const OutputError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/file.npta"), std::string::npos);
  }
  EXPECT_THROW(write_file("/nonexistent/dir/out.csv", "x"), OutputError);
}
