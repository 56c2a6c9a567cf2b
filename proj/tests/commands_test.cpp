#include "magipipe/commands.hpp"

#include <gtest/gtest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "magipipe/synth.hpp"

namespace fs = std::filesystem;
using namespace magipipe;

namespace {

class CommandsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("magipipe-commands-" + std::to_string(::getpid()) + "-" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& bytes) {
    const fs::path p = dir_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << bytes;
    return p;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  CommandIo io() { return CommandIo{out_, err_, {}}; }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

PageGraph grid_page() {
  PageGraph page;
  page.page_id = "grid";
  page.width = page.height = 1000;
  page.panels = {{0, 0, 480, 480}, {520, 0, 1000, 480}, {0, 520, 480, 1000}, {520, 520, 1000, 1000}};
  return page;
}

}  // namespace

TEST(RunConfig, DefaultsAndValidation) {
  RunConfig c;
  EXPECT_DOUBLE_EQ(c.tau, 0.65);
  EXPECT_DOUBLE_EQ(c.confidence_cutoff, 0.4);
  EXPECT_NO_THROW(c.validate());
  c.tau = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.epsilon_fraction = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(RunConfig, ApplyJson) {
  const RunConfig c = apply_config_json(RunConfig{}, R"({"tau": 0.5, "baseline": "nearest", "top_k": 7})");
  EXPECT_DOUBLE_EQ(c.tau, 0.5);
  EXPECT_EQ(c.speaker_method, SpeakerMethod::kNearestCharacter);
  EXPECT_EQ(c.top_k, 7u);
  EXPECT_DOUBLE_EQ(c.confidence_cutoff, 0.4);
  EXPECT_THROW(apply_config_json(RunConfig{}, R"({"bogus": 1})"), std::invalid_argument);
  EXPECT_THROW(apply_config_json(RunConfig{}, "not json"), std::invalid_argument);
  const RunConfig round = apply_config_json(RunConfig{}, config_json(c));
  EXPECT_DOUBLE_EQ(round.tau, 0.5);
  EXPECT_EQ(round.top_k, 7u);
}

TEST_F(CommandsTest, TranscribeSyntheticPageInGtOrder) {
  const SyntheticPage s = generate_random_page(21);
  const fs::path in = write("in/page.json", serialize_page_graph(s.graph));
  ASSERT_EQ(cmd_transcribe({in}, RunConfig{}, dir_ / "out", io()), kExitOk);
  const std::string text = read(dir_ / "out" / (s.graph.page_id + ".transcript.txt"));
  std::string expected;
  for (std::size_t t : *s.annotation.gt_text_order) {
    expected += *s.graph.texts[t].content;
    expected += '\n';
  }
  std::string contents;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) contents += line.substr(line.find(": ") + 2) + "\n";
  EXPECT_EQ(contents, expected);
  const auto sidecar = nlohmann::json::parse(read(dir_ / "out" / (s.graph.page_id + ".sidecar.json")));
  EXPECT_TRUE(sidecar.contains("config"));
  EXPECT_TRUE(sidecar.contains("speakers"));
}

TEST_F(CommandsTest, TranscribeEmptyPage) {
  PageGraph page;
  page.page_id = "empty";
  page.width = page.height = 100;
  const fs::path in = write("empty.json", serialize_page_graph(page));
  EXPECT_EQ(cmd_transcribe({in}, RunConfig{}, dir_ / "out", io()), kExitOk);
  EXPECT_EQ(read(dir_ / "out" / "empty.transcript.txt"), "");
}

TEST_F(CommandsTest, TranscribeCorruptFileIsPartialFailure) {
  write("in/a.json", serialize_page_graph(generate_random_page(1).graph));
  write("in/b.json", "{ not json");
  write("in/c.json", serialize_page_graph(generate_random_page(2).graph));
  EXPECT_EQ(cmd_transcribe({dir_ / "in"}, RunConfig{}, dir_ / "out", io()), kExitPartialFailure);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "synth-1.transcript.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "synth-2.transcript.txt"));
  EXPECT_NE(err_.str().find("b.json: error:"), std::string::npos);
}

TEST_F(CommandsTest, TranscribeIsByteIdentical) {
  const fs::path in = write("p.json", serialize_page_graph(generate_random_page(8, RandomPageOptions{0.3}).graph));
  ASSERT_EQ(cmd_transcribe({in}, RunConfig{}, dir_ / "a", io()), kExitOk);
  ASSERT_EQ(cmd_transcribe({in}, RunConfig{}, dir_ / "b", io()), kExitOk);
  EXPECT_EQ(read(dir_ / "a" / "synth-8.transcript.txt"), read(dir_ / "b" / "synth-8.transcript.txt"));
  EXPECT_EQ(read(dir_ / "a" / "synth-8.sidecar.json"), read(dir_ / "b" / "synth-8.sidecar.json"));
}

TEST_F(CommandsTest, OrderGrid) {
  const fs::path in = write("grid.json", serialize_page_graph(grid_page()));
  EXPECT_EQ(cmd_order({in}, RunConfig{}, io()), kExitOk);
  EXPECT_EQ(out_.str(), "page: grid\npanels: 1 0 3 2\ntexts: \n");
}

TEST_F(CommandsTest, OrderSinglePanel) {
  PageGraph page = grid_page();
  page.panels = {{0, 0, 1000, 1000}};
  page.texts = {{{10, 10, 20, 20}, "a"}, {{500, 10, 520, 20}, "b"}};
  page.text_char_scores = ScoreMatrix(2, 0);
  const fs::path in = write("one.json", serialize_page_graph(page));
  EXPECT_EQ(cmd_order({in}, RunConfig{}, io()), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("panels: 0\ntexts: 1 0\n"), std::string::npos);
}

TEST_F(CommandsTest, OrderReportsInjectedCycle) {
  const fs::path in = write("grid.json", serialize_page_graph(grid_page()));
  CommandIo hooked = io();
  hooked.dag_override = [](const PageGraph&) {
    return PanelDag{4, {{0, 1}, {1, 2}, {2, 0}, {0, 3}, {1, 3}, {2, 3}}};
  };
  EXPECT_EQ(cmd_order({in}, RunConfig{}, hooked), kExitOk);
  EXPECT_NE(err_.str().find("warning: cycle"), std::string::npos);
  EXPECT_NE(out_.str().find("panels: "), std::string::npos);
}

TEST_F(CommandsTest, EvaluatePerfectDataset) {
  SynthRequest request;
  request.count = 3;
  ASSERT_EQ(cmd_synth(request, RunConfig{}, dir_ / "data", io()), kExitOk);
  ASSERT_EQ(cmd_evaluate({dir_ / "data" / "pages"}, {dir_ / "data" / "annotations"}, RunConfig{}, dir_ / "eval", io()),
            kExitOk);
  const auto report = nlohmann::json::parse(read(dir_ / "eval" / "eval_report.json"));
  EXPECT_EQ(report["page_count"], 3);
  EXPECT_DOUBLE_EQ(report["metrics"]["ap_character"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(report["metrics"]["recall_at_num_texts"].get<double>(), 1.0);
  EXPECT_NE(out_.str().find("Speaker association"), std::string::npos);
}

TEST_F(CommandsTest, EvaluateNoPages) {
  fs::create_directories(dir_ / "none");
  EXPECT_EQ(cmd_evaluate({dir_ / "none"}, {dir_ / "none"}, RunConfig{}, dir_ / "eval", io()), kExitPartialFailure);
  EXPECT_NE(err_.str().find("no pages"), std::string::npos);
}

TEST_F(CommandsTest, EvaluateUnmatchedIds) {
  const SyntheticPage a = generate_random_page(1);
  const SyntheticPage b = generate_random_page(2);
  write("pred/a.json", serialize_page_graph(a.graph));
  write("pred/b.json", serialize_page_graph(b.graph));
  write("gt/a.json", serialize_page_annotation(a.annotation));
  EXPECT_EQ(cmd_evaluate({dir_ / "pred"}, {dir_ / "gt"}, RunConfig{}, dir_ / "eval", io()), kExitPartialFailure);
  EXPECT_NE(err_.str().find("synth-2"), std::string::npos);
}

TEST_F(CommandsTest, MineWritesPairs) {
  const fs::path in = write("p.json", serialize_page_graph(generate_random_page(6).graph));
  ASSERT_EQ(cmd_mine({in}, RunConfig{}, dir_ / "out", io()), kExitOk);
  const auto mined = nlohmann::json::parse(read(dir_ / "out" / "synth-6.mined.json"));
  EXPECT_TRUE(mined.contains("character_positives"));
  EXPECT_TRUE(mined.contains("character_negatives"));
  EXPECT_TRUE(mined.contains("text_character_pairs"));
}

TEST_F(CommandsTest, MineSkipsPageWithoutEmbeddings) {
  PageGraph page = generate_random_page(6).graph;
  page.char_embeddings.reset();
  const fs::path in = write("p.json", serialize_page_graph(page));
  EXPECT_EQ(cmd_mine({in}, RunConfig{}, dir_ / "out", io()), kExitOk);
  EXPECT_NE(err_.str().find("warning: missing_embeddings"), std::string::npos) << err_.str();
  EXPECT_FALSE(fs::exists(dir_ / "out" / "synth-6.mined.json"));
}

TEST_F(CommandsTest, SynthReproducible) {
  SynthRequest request;
  request.count = 3;
  RunConfig config;
  config.seed = 7;
  ASSERT_EQ(cmd_synth(request, config, dir_ / "a", io()), kExitOk);
  ASSERT_EQ(cmd_synth(request, config, dir_ / "b", io()), kExitOk);
  for (const char* id : {"synth-7", "synth-8", "synth-9"}) {
    const fs::path rel = fs::path("pages") / (std::string(id) + ".json");
    ASSERT_TRUE(fs::exists(dir_ / "a" / rel));
    EXPECT_EQ(read(dir_ / "a" / rel), read(dir_ / "b" / rel));
  }
  EXPECT_EQ(read(dir_ / "a" / "manifest.json"), read(dir_ / "b" / "manifest.json"));
  const auto manifest = nlohmann::json::parse(read(dir_ / "a" / "manifest.json"));
  EXPECT_EQ(manifest["generator_version"], std::string(kGeneratorVersion));
  EXPECT_EQ(manifest["pages"].size(), 3u);
}

TEST_F(CommandsTest, SynthZeroCount) {
  SynthRequest request;
  request.count = 0;
  ASSERT_EQ(cmd_synth(request, RunConfig{}, dir_ / "a", io()), kExitOk);
  const auto manifest = nlohmann::json::parse(read(dir_ / "a" / "manifest.json"));
  EXPECT_TRUE(manifest["pages"].empty());
}

TEST_F(CommandsTest, BinaryExitCodesAndConfigPrecedence) {
  const std::string bin = MAGI_PIPE_BINARY;
  auto run = [&](const std::string& args) {
    const int status = std::system((args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  EXPECT_EQ(run(bin), kExitUsage);
  EXPECT_EQ(run(bin + " order"), kExitUsage);
  EXPECT_EQ(run(bin + " transcribe x.json --tau 2"), kExitUsage);
  EXPECT_EQ(run(bin + " --help"), kExitOk);

  const fs::path in = write("p.json", serialize_page_graph(generate_random_page(3).graph));
  const fs::path cfg = write("cfg.json", R"({"tau": 0.3, "confidence_cutoff": 0.2})");
  const fs::path out = dir_ / "out";
  ASSERT_EQ(run("MAGI_PIPE_CONFIG=" + cfg.string() + " " + bin + " transcribe " + in.string() + " --tau 0.9 --out " +
                out.string()),
            kExitOk);
  const auto sidecar = nlohmann::json::parse(read(out / "synth-3.sidecar.json"));
  EXPECT_DOUBLE_EQ(sidecar["config"]["tau"].get<double>(), 0.9);
  EXPECT_DOUBLE_EQ(sidecar["config"]["confidence_cutoff"].get<double>(), 0.2);

  const fs::path bad = write("bad.json", R"({"nope": 1})");
  EXPECT_EQ(run(bin + " transcribe " + in.string() + " --config " + bad.string() + " --out " + out.string()),
            kExitUsage);
}
