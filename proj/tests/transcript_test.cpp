#include "magipipe/transcript.hpp"

#include <gtest/gtest.h>

#include <random>

#include "magipipe/synth.hpp"

using namespace magipipe;

namespace {

PageGraph texts_page(std::vector<std::optional<std::string>> contents) {
  PageGraph page;
  page.width = page.height = 100;
  for (auto& c : contents) page.texts.push_back({{0, 0, 1, 1}, std::move(c)});
  return page;
}

ReadingOrder identity_order(std::size_t n) {
  ReadingOrder o;
  for (std::size_t t = 0; t < n; ++t) o.text_order.push_back(t);
  return o;
}

}  // namespace

TEST(NameClusters, FirstSpeakerGetsOne) {
  ClusterSet clusters;
  clusters.labels = {0, 7, 7};
  SpeakerAssignment speakers;
  speakers.per_text = {SpeakerPrediction{2, 0.9}};
  const auto names = name_clusters(clusters, identity_order(1), speakers);
  EXPECT_EQ(names.at(7), "1");
  EXPECT_EQ(names.at(0), "2");
}

TEST(NameClusters, SilentClustersByCharacterIndex) {
  ClusterSet clusters;
  clusters.labels = {1, 0};
  const auto names = name_clusters(clusters, identity_order(0), SpeakerAssignment{});
  EXPECT_EQ(names.at(1), "1");
  EXPECT_EQ(names.at(0), "2");
}

TEST(NameClusters, ReusedForSameCluster) {
  ClusterSet clusters;
  clusters.labels = {0, 0};
  SpeakerAssignment speakers;
  speakers.per_text = {SpeakerPrediction{0, 0.9}, SpeakerPrediction{1, 0.9}};
  const auto names = name_clusters(clusters, identity_order(2), speakers);
  EXPECT_EQ(names.size(), 1u);
  EXPECT_EQ(names.at(0), "1");
}

TEST(GenerateTranscript, Examples) {
  ClusterSet clusters;
  clusters.labels = {0};
  SpeakerAssignment speakers;
  speakers.per_text = {SpeakerPrediction{0, 0.9}};
  const PageGraph page = texts_page({"HELLO"});
  Transcript t = generate_transcript(page, identity_order(1), clusters, speakers);
  ASSERT_EQ(t.lines.size(), 1u);
  EXPECT_EQ(t.lines[0].speaker_label, "1");
  EXPECT_EQ(t.lines[0].content, "HELLO");

  speakers.per_text = {std::nullopt};
  t = generate_transcript(page, identity_order(1), clusters, speakers);
  EXPECT_EQ(t.lines[0].speaker_label, kUnknownSpeaker);

  EXPECT_TRUE(generate_transcript(texts_page({}), identity_order(0), clusters, {}).lines.empty());
}

TEST(GenerateTranscript, PlaceholderForMissingContent) {
  const Transcript t = generate_transcript(texts_page({std::nullopt, std::nullopt}), identity_order(2), {}, {});
  EXPECT_EQ(t.lines[1].content, "<text 1>");
}

TEST(GenerateTranscript, FollowsTextOrder) {
  ReadingOrder order;
  order.text_order = {2, 0, 1};
  const Transcript t = generate_transcript(texts_page({"a", "b", "c"}), order, {}, {});
  ASSERT_EQ(t.lines.size(), 3u);
  EXPECT_EQ(t.lines[0].content, "c");
  EXPECT_EQ(t.lines[0].text_index, 2u);
}

TEST(Render, Examples) {
  Transcript t;
  t.lines = {{"1", "HELLO", 0, {}, {}}};
  EXPECT_EQ(render(t), "1: HELLO\n");
  t.lines = {{std::string(kUnknownSpeaker), "BOOM", 0, {}, {}}};
  EXPECT_EQ(render(t), "⟨?⟩: BOOM\n");
  EXPECT_EQ(render(Transcript{}), "");
}

TEST(Render, EscapesLineBreaks) {
  Transcript t;
  t.lines = {{"1", "two\nlines\r\\", 0, {}, {}}};
  EXPECT_EQ(render(t), "1: two\\nlines\\r\\\\\n");
}

TEST(Render, PanelMarkers) {
  Transcript t;
  t.lines = {{"1", "a", 0, {}, 2}, {"1", "b", 1, {}, 2}, {"2", "c", 2, {}, 0}, {"2", "d", 3, {}, std::nullopt}};
  EXPECT_EQ(render(t, RenderOptions{true}), "# panel 2\n1: a\n1: b\n# panel 0\n2: c\n# panel none\n2: d\n");
  const auto parsed = parse_transcript(render(t, RenderOptions{true}));
  ASSERT_EQ(parsed.size(), 4u);
  EXPECT_EQ(parsed[3], (ParsedLine{"2", "d"}));
}

TEST(ParseTranscript, RoundTripsArbitraryContent) {
  std::mt19937_64 rng(9);
  const std::string alphabet = "ab: \\\n\r#?!xyz";
  for (int k = 0; k < 500; ++k) {
    Transcript t;
    const std::size_t n = rng() % 5;
    for (std::size_t i = 0; i < n; ++i) {
      std::string content;
      for (std::size_t c = rng() % 12; c > 0; --c) content += alphabet[rng() % alphabet.size()];
      t.lines.push_back({std::to_string(1 + rng() % 3), content, i, {}, {}});
    }
    const auto parsed = parse_transcript(render(t));
    ASSERT_EQ(parsed.size(), t.lines.size());
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(parsed[i].speaker_label, t.lines[i].speaker_label);
      EXPECT_EQ(parsed[i].content, t.lines[i].content);
    }
  }
}

TEST(ParseTranscript, RejectsLineWithoutSeparator) {
  EXPECT_THROW(parse_transcript("no separator\n"), std::invalid_argument);
}

TEST(GenerateTranscript, OneLinePerText) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SyntheticPage s = generate_random_page(seed);
    const Tolerance tol = Tolerance::for_page(s.graph.width, s.graph.height);
    const PanelAssignment assignment = assign_boxes_to_panels(s.graph, tol);
    const ReadingOrder order = reading_order(s.graph, assignment, tol).order;
    const Transcript t = generate_transcript(s.graph, order, cluster_characters(s.graph),
                                             assign_speakers(s.graph).assignment, &assignment);
    EXPECT_EQ(t.lines.size(), s.graph.texts.size());
  }
}
