/*
 * Copyright 2026 The vbhead Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_util.hpp"
#include "vbhead/cli.hpp"
#include "vbhead/model.hpp"
#include "vbhead/prediction_table.hpp"

using namespace vbhead;
using namespace vbhead::testing;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = run_cli(args);
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

void single_row_table(const std::filesystem::path& path, double p0, double p1) {
  PredictionTable t;
  t.ids = {"x"};
  t.outputs.resize(1, 2);
  t.outputs << p0, p1;
  save_table(t, path);
}

}  // namespace

TEST(Cli, VersionAndHelp) {
  const CliRun v = run({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.out, "0.1.0\n");
  for (const char* sub : {"synth", "train", "predict", "fuse", "ensemble", "eval", "uncertainty", "tune-fusion",
                          "merge-labels", "concat"}) {
    const CliRun h = run({sub, "--help"});
    EXPECT_EQ(h.code, 0) << sub;
    EXPECT_NE(h.out.find("--config"), std::string::npos) << sub;
  }
  EXPECT_NE(run({"train", "--help"}).out.find("--kl-weight"), std::string::npos);
}

TEST(Cli, UserErrorsExitWithOne) {
  TempDir dir("cli_err");
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"bogus"}).code, 1);
  EXPECT_EQ(run({"synth", "--n", "10", "--d", "2", "--out", dir.path().string()}).code, 1);  // no --seed
  EXPECT_EQ(run({"synth", "--n", "10", "--d", "2", "--seed", "1", "--out", dir.path().string(), "--colour", "red"})
                .code,
            1);
  const CliRun missing = run({"eval", "--data", (dir / "nope.csv").string(), "--predictions", (dir / "p.csv").string()});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("error:"), std::string::npos);
  EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);
}

TEST(Cli, FuseExample) {
  TempDir dir("cli_fuse");
  single_row_table(dir / "a.csv", 0.6, 0.4);
  single_row_table(dir / "b.csv", 0.2, 0.8);
  const CliRun r = run({"fuse", "--tables", (dir / "a.csv").string(), (dir / "b.csv").string(), "--weights", "1.0", "0.5",
                     "--out", (dir / "f.csv").string(), "--decisions", (dir / "d.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "predicted class 1\n");
  EXPECT_EQ(read_file(dir / "d.csv"), "id,predicted\nx,1\n");
}

TEST(Cli, PipelineSeparatesBlobsAndPredictsValidTables) {
  TempDir dir("cli_pipe");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(run({"synth", "--kind", "blobs", "--n", "400", "--d", "16", "--k", "2", "--separation", "10", "--noise",
                 "0.5", "--seed", "7", "--out", data})
                .code,
            0);
  ASSERT_EQ(run({"train", "--head", "linear", "--train", data + "/train.csv", "--dev", data + "/dev.csv", "--out",
                 (dir / "lin.json").string(), "--seed", "7"})
                .code,
            0);
  const CliRun ev = run({"eval", "--data", data + "/dev.csv", "--checkpoint", (dir / "lin.json").string(), "--seed", "7"});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(nlohmann::json::parse(ev.out).at("uar").get<double>(), 1.0);
  EXPECT_TRUE(std::filesystem::exists(dir / "lin.report.json"));

  ASSERT_EQ(run({"train", "--head", "bayes", "--train", data + "/train.csv", "--dev", data + "/dev.csv", "--prior-from",
                 (dir / "lin.json").string(), "--out", (dir / "bayes.json").string(), "--seed", "7"})
                .code,
            0);
  ASSERT_EQ(run({"predict", "--checkpoint", (dir / "bayes.json").string(), "--data", data + "/dev.csv", "--samples",
                 "500", "--seed", "7", "--out", (dir / "pred.csv").string()})
                .code,
            0);
  const PredictionTable t = load_table(dir / "pred.csv");
  for (Eigen::Index i = 0; i < t.size(); ++i) EXPECT_NEAR(t.outputs.row(i).sum(), 1.0, 1e-6);
  const CliRun pe = run({"eval", "--data", data + "/dev.csv", "--predictions", (dir / "pred.csv").string()});
  ASSERT_EQ(pe.code, 0);
  EXPECT_GE(nlohmann::json::parse(pe.out).at("uar").get<double>(), 0.95);
}

TEST(Cli, ConfigFileMergesUnderExplicitFlags) {
  TempDir dir("cli_cfg");
  write_file(dir / "cfg.json", R"({"kind": "blobs", "n": 30, "d": 3, "k": 3, "separation": 2.0, "seed": 5,
                                  "dev_fraction": 0.5})");
  const std::string a = (dir / "a").string(), b = (dir / "b").string();
  ASSERT_EQ(run({"synth", "--config", (dir / "cfg.json").string(), "--out", a}).code, 0);
  ASSERT_EQ(run({"synth", "--config", (dir / "cfg.json").string(), "--out", b, "--n", "40"}).code, 0);
  EXPECT_EQ(load_dataset(a + "/dev.csv").size(), 15u);
  EXPECT_EQ(load_dataset(b + "/dev.csv").size(), 20u);
  EXPECT_EQ(load_dataset(a + "/train.csv").num_outputs, 3u);

  write_file(dir / "bad.json", "[1,2]");
  EXPECT_EQ(run({"synth", "--config", (dir / "bad.json").string(), "--out", a}).code, 1);
}

TEST(Cli, EnsembleMergeConcatAndTune) {
  TempDir dir("cli_misc");
  single_row_table(dir / "a.csv", 0.6, 0.4);
  single_row_table(dir / "b.csv", 0.3, 0.7);
  single_row_table(dir / "c.csv", 0.2, 0.8);
  ASSERT_EQ(run({"ensemble", "--mode", "vote", "--tables", (dir / "a.csv").string(), (dir / "b.csv").string(),
                 (dir / "c.csv").string(), "--out", (dir / "v.csv").string()})
                .code,
            0);
  EXPECT_EQ(argmax_rows(load_table(dir / "v.csv").outputs), std::vector<int>{1});
  EXPECT_EQ(run({"ensemble", "--mode", "average", "--tables", (dir / "a.csv").string(), (dir / "b.csv").string(),
                 "--out", (dir / "x.csv").string()})
                .code,
            1);

  EmbeddingDataset req = tiny_classification(4, 2, 2);
  req.class_names = {"no", "yes"};
  EmbeddingDataset comp = req;
  comp.class_names = {"affil", "presta"};
  comp.records[0].label = 1;
  save_dataset(req, dir / "req.csv");
  save_dataset(comp, dir / "comp.csv");
  ASSERT_EQ(run({"merge-labels", "--requests", (dir / "req.csv").string(), "--complaints", (dir / "comp.csv").string(),
                 "--out", (dir / "merged.csv").string()})
                .code,
            0);
  const EmbeddingDataset merged = load_dataset(dir / "merged.csv");
  EXPECT_EQ(merged.class_names, kMergedClassNames);
  EXPECT_EQ(merged.records[0].label, 2);

  ASSERT_EQ(run({"concat", "--a", (dir / "req.csv").string(), "--b", (dir / "req.csv").string(), "--out",
                 (dir / "cat.csv").string()})
                .code,
            0);
  EXPECT_EQ(load_dataset(dir / "cat.csv").num_features, 4u);

  EmbeddingDataset dev = tiny_classification(2, 1, 2);
  dev.records[0].id = "x";
  dev.records[1].id = "y";
  save_dataset(dev, dir / "dev.csv");
  PredictionTable flat, sharp;
  flat.ids = sharp.ids = {"x", "y"};
  flat.outputs.resize(2, 2);
  flat.outputs << 0.6, 0.4, 0.6, 0.4;
  sharp.outputs.resize(2, 2);
  sharp.outputs << 0.9, 0.1, 0.2, 0.8;
  save_table(flat, dir / "flat.csv");
  save_table(sharp, dir / "sharp.csv");
  const CliRun tune = run({"tune-fusion", "--tables", (dir / "flat.csv").string(), (dir / "sharp.csv").string(),
                           "--grid", "0", "1", "--data", (dir / "dev.csv").string()});
  ASSERT_EQ(tune.code, 0) << tune.err;
  const auto j = nlohmann::json::parse(tune.out);
  EXPECT_EQ(j.at("candidates").get<int>(), 3);
  EXPECT_EQ(j.at("uar").get<double>(), 1.0);
  EXPECT_EQ(j.at("weights"), nlohmann::json::parse("[0.0, 1.0]"));
}
