#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "connsig/error.hpp"
#include "connsig/io.hpp"
#include "connsig/rng.hpp"

using namespace connsig;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("connsig_io_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name, const std::string& content) const {
    std::ofstream(path / name, std::ios::binary) << content;
    return path / name;
  }
};

}  // namespace

TEST(Format, ShortestRoundTrip) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.normal() * std::pow(10.0, double(rng.below(40)) - 20);
    EXPECT_EQ(io::parse_double(io::format_double(v), "t"), v);
  }
  EXPECT_EQ(io::format_double(0.5), "0.5");
  EXPECT_THROW(io::parse_double("1.5x", "t"), Error);
  EXPECT_THROW(io::parse_double("nan", "t"), Error);
  EXPECT_EQ(io::parse_int(" 42 ", "t"), 42);
}

TEST(Hash, KnownVectors) {
  EXPECT_EQ(io::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(io::hex64(io::fnv1a64("a")), "af63dc4c8601ec8c");
}

TEST(GroupMatrixFile, RoundTripExact) {
  TempDir dir("gm");
  Rng rng(4);
  Eigen::MatrixXd v(3, 10);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index k = 0; k < 10; ++k) v(i, k) = rng.uniform(-1, 1);
  const connectome::GroupMatrix g({"a", "b", "c"}, v, 5);
  io::write_group_matrix(dir.path / "g.csv", g, "REST1");
  const connectome::GroupMatrix back = io::read_group_matrix(dir.path / "g.csv");
  EXPECT_EQ(back.values(), v);
  EXPECT_EQ(back.subject_ids(), g.subject_ids());
  EXPECT_EQ(back.region_count(), 5);
  const auto side = io::Json::parse(io::read_text(dir.path / "g.json"));
  EXPECT_EQ(side["edge_ordering"], "row-major-upper");
  EXPECT_EQ(side["source_session"], "REST1");
  EXPECT_FALSE(fs::exists(dir.path / "g.csv.tmp"));
}

TEST(GroupMatrixFile, InfersRegionsWithoutSidecar) {
  TempDir dir("gm2");
  const auto p = dir.file("x.csv", "subject_id,e0,e1,e2\ns1,0.1,0.2,0.3\ns2,0.3,0.2,0.1\n");
  EXPECT_EQ(io::read_group_matrix(p).region_count(), 3);
  const auto bad = dir.file("y.csv", "subject_id,e0,e1\ns1,0.1,0.2\n");
  EXPECT_THROW(io::read_group_matrix(bad), Error);
  const auto ragged = dir.file("z.csv", "subject_id,e0,e1,e2\ns1,0.1,0.2\n");
  try {
    io::read_group_matrix(ragged);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("z.csv:2"), std::string::npos);
  }
}

TEST(TimeSeriesFile, HeaderOptionalAndIndexed) {
  TempDir dir("ts");
  const auto p = dir.file("s_A.csv", "region,t0,t1,t2\n1,4,5,6\n0,1,2,3\n");
  const auto ts = io::read_timeseries_csv(p, "s", 0.72);
  EXPECT_EQ(ts.signal()(0, 2), 3.0);
  EXPECT_EQ(ts.signal()(1, 0), 4.0);
  EXPECT_THROW(io::read_indexed_rows(dir.file("b.csv", "0,1,2,3\n2,1,2,3\n")), Error);
  try {
    io::read_indexed_rows(dir.file("c.csv", "0,1,2,3\n1,1,oops,3\n"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find("c.csv:2"), std::string::npos);
  }
}

TEST(ParcellationFile, Reads) {
  TempDir dir("parc");
  const auto p = dir.file("p.tsv", "index\tarea_number\tname\tgroup_label\n0\t1\tV1\tVisual\n1\t46\tp9-46v\tPFC\n");
  const auto parc = io::read_parcellation_tsv(p);
  EXPECT_EQ(parc.region_count(), 2u);
  EXPECT_EQ(parc.at(1).area_number, 46);
  EXPECT_THROW(io::read_parcellation_tsv(dir.file("q.tsv", "0\t1\tV1\n")), Error);
  const auto m = io::read_parcel_map_tsv(dir.file("m.tsv", "voxel\tregion\n1\t0\n0\t1\n"));
  EXPECT_EQ(m, (std::vector<int>{1, 0}));
}

TEST(Reports, JsonFieldsAndTables) {
  const TrialReport r = make_trial_report({50, 60, 70}, 100, 9);
  const io::Json j = io::to_json(r);
  EXPECT_EQ(j["trials"], 3);
  EXPECT_DOUBLE_EQ(j["mean_accuracy"].get<double>(), 60.0);
  EXPECT_DOUBLE_EQ(j["std_accuracy"].get<double>(), 10.0);
  EXPECT_EQ(j["feature_budget"], 100);
  EXPECT_EQ(io::trial_report_csv(r), "trial,accuracy\n0,50\n1,60\n2,70\n");
  SweepCurve c{{10, 20}, {80.5, 90}};
  EXPECT_EQ(io::sweep_curve_csv(c), "budget,accuracy\n10,80.5\n20,90\n");
  stats::EnrichmentResult e{3, 4, 1.5, 0.01, -2, true};
  EXPECT_EQ(io::enrichment_tsv({e}), "item_id\tobserved\texpected\tlog10_p\tpassed\n3\t4\t1.5\t-2\ttrue\n");
}

TEST(Reports, TrialReportMoments) {
  const TrialReport r = make_trial_report({1, 2, 3, 4, 10}, 1, 1);
  double mean = 0;
  for (double x : r.per_trial) mean += x;
  mean /= 5;
  double ss = 0;
  for (double x : r.per_trial) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(r.mean_accuracy, mean, 1e-10);
  EXPECT_NEAR(r.std_accuracy, std::sqrt(ss / 4), 1e-10);
  EXPECT_EQ(make_trial_report({42}, 1, 1).std_accuracy, 0.0);
}
