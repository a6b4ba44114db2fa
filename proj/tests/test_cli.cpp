#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "erpdepth/image_io.hpp"
#include "erpdepth/metrics.hpp"
#include "erpdepth/synthetic_scene.hpp"

namespace erpdepth {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("erpdepth_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the binary with stdout and stderr captured; returns the exit code.
  int run(const std::string& args) {
    const std::string cmd = std::string(ERPDEPTH_CLI_PATH) + " " + args + " >" +
                            path("stdout.txt") + " 2>" + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    stdout_ = slurp(path("stdout.txt"));
    stderr_ = slurp(path("stderr.txt"));
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  std::string write_config(const std::string& name, const json& j) {
    write_text_file(path(name), j.dump(2));
    return path(name);
  }

  static json pair_config(int height) {
    return json{
        {"schema_version", 1},
        {"grid", {{"height", height}}},
        {"pair",
         {{"target_pose", {{"axis_angle", {0, 0, 0}}, {"translation", {0, 0, 0}}}},
          {"relative_pose", {{"axis_angle", {0, 0, 0}}, {"translation", {0.1, 0, 0}}}}}}};
  }

  fs::path dir_;
  std::string stdout_;
  std::string stderr_;
};

TEST_F(Cli, HelpAndMissingSubcommand) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("bogus"), 2);
}

TEST_F(Cli, SynthWritesThreeFilesPerView) {
  json j{{"schema_version", 1},
         {"grid", {{"height", 8}}},
         {"views",
          {{{"name", "a"}, {"pose", {{"axis_angle", {0, 0, 0}}, {"translation", {0, 0, 0}}}}},
           {{"name", "b"}, {"pose", {{"axis_angle", {0, 0.3, 0}}, {"translation", {0.1, 0, 0}}}}}}}};
  ASSERT_EQ(run("synth --config " + write_config("c.json", j) + " --out " + path("out")), 0)
      << stderr_;
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(path("out"))) n += e.is_regular_file();
  EXPECT_EQ(n, 6u);
  for (const char* f : {"a.png", "a_depth.pfm", "a_pose.json", "b.png", "b_depth.pfm",
                        "b_pose.json"}) {
    EXPECT_TRUE(fs::exists(path("out") + "/" + f)) << f;
  }
}

TEST_F(Cli, SynthPairWritesSixFilesAndRelativePose) {
  ASSERT_EQ(run("synth --config " + write_config("c.json", pair_config(8)) + " --out " +
                path("out")),
            0);
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(path("out"))) n += e.is_regular_file();
  EXPECT_EQ(n, 7u);
  EXPECT_TRUE(fs::exists(path("out") + "/relative_pose.json"));
  EXPECT_NEAR(read_pose_json(path("out") + "/relative_pose.json").translation.x(), 0.1, 1e-15);
}

TEST_F(Cli, SynthIsDeterministic) {
  const std::string c = write_config("c.json", pair_config(8));
  ASSERT_EQ(run("synth --config " + c + " --out " + path("a")), 0);
  ASSERT_EQ(run("synth --config " + c + " --out " + path("b")), 0);
  for (const char* f : {"target.png", "source_depth.pfm", "relative_pose.json"}) {
    EXPECT_EQ(slurp(path("a") + "/" + f), slurp(path("b") + "/" + f)) << f;
  }
}

TEST_F(Cli, MalformedJsonExitsTwoWithLocation) {
  write_text_file(path("bad.json"), "{\n  \"schema_version\": 1,\n  \"grid\": [\n}\n");
  EXPECT_EQ(run("synth --config " + path("bad.json") + " --out " + path("out")), 2);
  EXPECT_NE(stderr_.find("line 4"), std::string::npos) << stderr_;
}

TEST_F(Cli, UnknownFieldAndMissingConfigExitTwo) {
  json j = pair_config(8);
  j["pair"]["scale"] = 1.0;
  EXPECT_EQ(run("synth --config " + write_config("c.json", j) + " --out " + path("out")), 2);
  EXPECT_NE(stderr_.find("scale"), std::string::npos);
  EXPECT_EQ(run("synth --config " + path("none.json") + " --out " + path("out")), 2);
}

TEST_F(Cli, WarpIdentityReproducesInput) {
  ASSERT_EQ(run("synth --config " + write_config("c.json", pair_config(16)) + " --out " +
                path("s")),
            0);
  write_pose_json(path("id.json"), Pose::identity());
  ASSERT_EQ(run("warp --source " + path("s/target.png") + " --depth " +
                path("s/target_depth.pfm") + " --pose " + path("id.json") + " --out " +
                path("w")),
            0)
      << stderr_;
  const ErpImage in = read_png_image(path("s/target.png"));
  const ErpImage out = read_png_image(path("w/warped.png"));
  for (std::size_t i = 0; i < in.values().size(); ++i) {
    EXPECT_NEAR(out.values()[i], in.values()[i], 1.0 / 255.0);
  }
  EXPECT_TRUE(fs::exists(path("w/valid_mask.png")));
  EXPECT_EQ(run("warp --source " + path("s/target.png") + " --depth " + path("none.pfm") +
                " --pose " + path("id.json") + " --out " + path("w")),
            2);
}

TEST_F(Cli, WarpGridMismatchExitsTwo) {
  write_png_image(path("src.png"), ErpImage(ErpGrid::from_height(8), 3, 0.5));
  write_pfm(path("d.pfm"), DepthMap(ErpGrid::from_height(4), 1.0));
  write_pose_json(path("id.json"), Pose::identity());
  EXPECT_EQ(run("warp --source " + path("src.png") + " --depth " + path("d.pfm") + " --pose " +
                path("id.json") + " --out " + path("w")),
            2);
}

TEST_F(Cli, WeightmapCsvForHeightFour) {
  ASSERT_EQ(run("weightmap --height 4 --width 8 --out " + path("wm")), 0) << stderr_;
  EXPECT_EQ(slurp(path("wm/weightmap.csv")),
            "row,weight\n0,0.382683\n1,0.923880\n2,0.923880\n3,0.382683\n");
  const RasterImage png = read_png_raster(path("wm/weightmap.png"));
  ASSERT_EQ(png.height, 4);
  for (int u = 0; u < 8; ++u) {
    EXPECT_EQ(png.values[static_cast<std::size_t>(u)], png.values[static_cast<std::size_t>(3 * 8 + u)]);
  }
  EXPECT_EQ(run("weightmap --height 4 --width 6 --out " + path("wm")), 2);
}

TEST_F(Cli, CubemapRoundTripAndReverse) {
  write_png_image(path("flat.png"), ErpImage(ErpGrid::from_height(16), 3, 0.5));
  ASSERT_EQ(run("cubemap --in " + path("flat.png") + " --face-size 16 --roundtrip"), 0);
  EXPECT_NE(stdout_.find("psnr_db: inf"), std::string::npos) << stdout_;
  ASSERT_EQ(run("cubemap --in " + path("flat.png") + " --face-size 8 --out " + path("faces")), 0);
  std::string faces;
  for (const char* s : {"_F", "_B", "_L", "_R", "_U", "_D"}) {
    faces += " " + path("faces") + "/flat" + s + ".png";
  }
  for (const auto& e : fs::directory_iterator(path("faces"))) {
    EXPECT_NE(faces.find(e.path().string()), std::string::npos) << e.path();
  }
  ASSERT_EQ(run("cubemap --reverse --height 16 --out " + path("back.png") + " --faces" + faces),
            0)
      << stderr_;
  EXPECT_EQ(read_png_image(path("back.png")).grid().height, 16);
  EXPECT_EQ(run("cubemap --reverse --height 16 --out " + path("back.png") + " --faces " +
                path("faces/flat_F.png")),
            2);
}

TEST_F(Cli, MetricsOutputsAndEmptyMask) {
  const ErpGrid g = ErpGrid::from_height(4);
  write_pfm(path("p.pfm"), DepthMap(g, 4.0));
  write_pfm(path("g.pfm"), DepthMap(g, 8.0));
  ASSERT_EQ(run("metrics --pred " + path("p.pfm") + " --gt " + path("g.pfm") + " --json " +
                path("m.json")),
            0)
      << stderr_;
  const json m = json::parse(slurp(path("m.json")));
  EXPECT_NEAR(m.at("abs_rel").get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(m.at("rmse").get<double>(), 4.0, 1e-12);
  EXPECT_EQ(m.at("delta1").get<double>(), 0.0);
  EXPECT_NE(stdout_.find("abs_rel"), std::string::npos);
  ASSERT_EQ(run("metrics --pred " + path("p.pfm") + " --gt " + path("g.pfm") +
                " --median-scale --json " + path("m2.json")),
            0);
  EXPECT_EQ(json::parse(slurp(path("m2.json"))).at("abs_rel").get<double>(), 0.0);

  write_png_mask(path("empty.png"), Mask(4, 8, 0));
  EXPECT_EQ(run("metrics --pred " + path("p.pfm") + " --gt " + path("g.pfm") + " --mask " +
                path("empty.png")),
            3);
}

TEST_F(Cli, RefineZeroIterationsReportsInitialState) {
  json j = pair_config(16);
  j["refine"] = {{"iterations", 0}, {"scales", {0, 1}}};
  ASSERT_EQ(run("refine --config " + write_config("c.json", j) + " --out " + path("r")), 0)
      << stderr_;
  const json report = json::parse(slurp(path("r/report.json")));
  EXPECT_EQ(report.at("status"), "completed");
  EXPECT_EQ(report.at("loss_trajectory").size(), 1u);
  EXPECT_EQ(report.at("initial_metrics"), report.at("final_metrics"));
  for (const char* f : {"loss.csv", "depth.pfm", "depth_error.png"}) {
    EXPECT_TRUE(fs::exists(path("r") + "/" + f)) << f;
  }
}

TEST_F(Cli, RefineDefaultPairConfigReachesTarget) {
  // At 64 x 128 the interpolation floor keeps Abs Rel just above 0.05.
  ASSERT_EQ(run("refine --config " + write_config("c.json", pair_config(128)) + " --out " +
                path("r")),
            0)
      << stderr_;
  const json report = json::parse(slurp(path("r/report.json")));
  EXPECT_EQ(report.at("loss_trajectory").size(), 301u);
  EXPECT_LT(report.at("final_metrics").at("abs_rel").get<double>(), 0.05);
  const auto& trajectory = report.at("loss_trajectory");
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    EXPECT_LE(trajectory[i].get<double>(), trajectory[i - 1].get<double>());
  }
}

TEST_F(Cli, RefineDivergentStepExitsFourWithPartialTrajectory) {
  json j = pair_config(16);
  j["refine"] = {{"iterations", 5}, {"scales", {0, 1}}, {"step_size", 1e308}};
  EXPECT_EQ(run("refine --config " + write_config("c.json", j) + " --out " + path("r")), 4);
  const json report = json::parse(slurp(path("r/report.json")));
  EXPECT_EQ(report.at("status"), "diverged");
  EXPECT_EQ(report.at("loss_trajectory").size(), 1u);
  EXPECT_TRUE(fs::exists(path("r/loss.csv")));
}

}  // namespace
}  // namespace erpdepth
