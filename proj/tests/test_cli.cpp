#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "support/tree_compare.hpp"

namespace planekit::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "planekit");
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "planekit_cli_test";
    fs::remove_all(root_);
    const Result r = invoke({"synth", "--out", data(), "--count", "3", "--planes", "4", "--width",
                             "160", "--height", "120", "--seed", "11"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string data() { return (root_ / "data").string(); }
  static std::string path(const std::string& name) { return (root_ / name).string(); }
  static std::string camera() { return (root_ / "data" / "camera.json").string(); }

  static fs::path root_;
};

fs::path CliPipeline::root_;

TEST_F(CliPipeline, SynthLayout) {
  EXPECT_TRUE(fs::exists(data() + "/camera.json"));
  for (const char* f : {"depth.fdm", "segmentation.png", "segmentation.json"}) {
    EXPECT_TRUE(fs::exists(data() + "/images/scene_0002/" + f)) << f;
  }
  EXPECT_TRUE(fs::exists(data() + "/gt/scene_0000/planes.json"));
}

TEST_F(CliPipeline, AnnotateThenEvaluateRecoversGroundTruth) {
  const Result a = invoke({"annotate", "--input", data() + "/images", "--out", path("ann"),
                           "--camera", camera(), "--seed", "3"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const Result e = invoke({"evaluate", "--pred", path("ann"), "--gt", data() + "/gt", "--out",
                           path("report.json")});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  const auto summary = nlohmann::json::parse(e.out);
  EXPECT_EQ(summary["images"], 3);
  EXPECT_GE(summary["depth_recall"][0].get<double>(), 0.95);
  EXPECT_GE(summary["normal_recall"][0].get<double>(), 0.95);
  const auto report = nlohmann::json::parse(std::ifstream(path("report.json")));
  EXPECT_EQ(report["per_image"].size(), 3u);
}

TEST_F(CliPipeline, EvaluateIdenticalTreesIsPerfect) {
  const Result e = invoke({"evaluate", "--pred", data() + "/gt", "--gt", data() + "/gt"});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  const auto summary = nlohmann::json::parse(e.out);
  EXPECT_EQ(summary["rand_index"].get<double>(), 1.0);
  EXPECT_EQ(summary["voi"].get<double>(), 0.0);
  EXPECT_EQ(summary["seg_covering"].get<double>(), 1.0);
}

TEST_F(CliPipeline, JobsDoNotChangeOutput) {
  for (const char* jobs : {"1", "8"}) {
    const Result r = invoke({"annotate", "--input", data() + "/images", "--out",
                             path(std::string("jobs") + jobs), "--camera", camera(), "--seed",
                             "5", "--jobs", jobs});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }
  const auto one = planekit::testing::snapshot_tree(path("jobs1"));
  EXPECT_FALSE(one.empty());
  EXPECT_EQ(one, planekit::testing::snapshot_tree(path("jobs8")));
}

TEST_F(CliPipeline, ClusterEncodeAndRender) {
  ASSERT_EQ(invoke({"cluster", "--input", data() + "/gt", "--out", path("ex.json"), "--normals",
                    "3", "--per-group", "2"})
                .code,
            kExitOk);
  const Result enc = invoke({"encode", "--input", data() + "/gt", "--exemplars", path("ex.json"),
                             "--out", path("targets")});
  ASSERT_EQ(enc.code, kExitOk) << enc.err;
  EXPECT_TRUE(fs::exists(path("targets") + "/scene_0001/targets.json"));
  EXPECT_EQ(invoke({"render-depth", "--input", data() + "/gt/scene_0000", "--out",
                    path("render.png")})
                .code,
            kExitOk);
  EXPECT_EQ(invoke({"export-mesh", "--input", data() + "/gt/scene_0000", "--out",
                    path("mesh.ply")})
                .code,
            kExitOk);
  EXPECT_GT(fs::file_size(path("mesh.ply")), 0u);
}

TEST_F(CliPipeline, MissingPredictionIsFormatError) {
  fs::create_directories(path("empty"));
  EXPECT_EQ(invoke({"evaluate", "--pred", path("empty"), "--gt", data() + "/gt"}).code,
            kExitFormat);
}

TEST(CliErrors, MissingCameraIsConfigurationError) {
  const Result r = invoke({"annotate", "--input", "/nonexistent", "--out", "/tmp/x", "--camera",
                           "/nonexistent/camera.json"});
  EXPECT_EQ(r.code, kExitConfiguration);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(CliErrors, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"evaluate", "--pred", "a", "--gt", "b", "--bogus"}).code, kExitUsage);
  EXPECT_EQ(invoke({"synth"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(CliErrors, TooManyPlanesIsConfigurationError) {
  const fs::path out = fs::temp_directory_path() / "planekit_cli_planes";
  EXPECT_EQ(invoke({"synth", "--out", out.string(), "--count", "1", "--planes", "500"}).code,
            kExitConfiguration);
  fs::remove_all(out);
}

TEST(CliErrors, ExitCodeMapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::kConfiguration), kExitConfiguration);
  EXPECT_EQ(exit_code_for(ErrorKind::kFormat), kExitFormat);
  EXPECT_EQ(exit_code_for(ErrorKind::kDecode), kExitDomain);
  EXPECT_EQ(exit_code_for(ErrorKind::kDegenerateSample), kExitDomain);
  EXPECT_EQ(exit_code_for(ErrorKind::kGeneration), kExitGeneration);
}

}  // namespace
}  // namespace planekit::cli
