#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sanmt/align_supervision.hpp"
#include "sanmt/errors.hpp"
#include "test_util.hpp"

namespace sanmt {
namespace {

HardAlignment random_alignment(std::mt19937_64& rng, std::size_t max_len = 12) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  HardAlignment h;
  h.m = len(rng);
  h.n = len(rng);
  if (h.m == 0 || h.n == 0) return h;
  const double density = std::uniform_real_distribution<double>(0.0, 0.4)(rng);
  std::bernoulli_distribution link(density);
  for (std::size_t s = 0; s < h.m; ++s)
    for (std::size_t t = 0; t < h.n; ++t)
      if (link(rng)) h.links.insert({s, t});
  return h;
}

TEST(ParsePharaoh, ParsesLinks) {
  const HardAlignment h = parse_pharaoh("0-0 1-0 2-2", 3, 3);
  EXPECT_EQ(h.links, (LinkSet{{0, 0}, {1, 0}, {2, 2}}));
  EXPECT_EQ(h.m, 3u);
}

TEST(ParsePharaoh, EmptyLineHasNoLinks) { EXPECT_TRUE(parse_pharaoh("", 2, 2).links.empty()); }

TEST(ParsePharaoh, TargetSourceOrderSwaps) {
  EXPECT_EQ(parse_pharaoh("0-2", 3, 2, PharaohOrder::TargetSource).links, (LinkSet{{2, 0}}));
}

TEST(ParsePharaoh, OutOfRangeIsParseError) {
  EXPECT_THROW(parse_pharaoh("3-0", 3, 3), ParseError);
  EXPECT_THROW(parse_pharaoh("0-3", 3, 3), ParseError);
}

TEST(ParsePharaoh, MalformedTokensNameTheirPosition) {
  for (const char* bad : {"0-", "-1", "a-b", "0_1", "1-2-3", "0--1"}) {
    EXPECT_THROW(parse_pharaoh(std::string("0-0 ") + bad, 5, 5), ParseError) << bad;
  }
  try {
    parse_pharaoh("0-0 1-1 x", 5, 5);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos) << e.what();
  }
}

TEST(ParsePharaoh, DuplicateLinksCollapse) { EXPECT_EQ(parse_pharaoh("1-1 1-1", 2, 2).links.size(), 1u); }

TEST(FormatPharaoh, RoundTrips) {
  const LinkSet links{{0, 2}, {1, 1}, {2, 0}};
  EXPECT_EQ(parse_pharaoh(format_pharaoh(links), 3, 3).links, links);
}

TEST(ToSupervision, SplitAndRightPreference) {
  const Matrix a = to_supervision(parse_pharaoh("0-0 1-0 2-2", 3, 3));
  EXPECT_EQ(a, (Matrix{{0.5, 0.5, 0, 0}, {0, 0, 1, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}));
}

TEST(ToSupervision, DiagonalIsIdentity) {
  EXPECT_EQ(to_supervision(parse_pharaoh("0-0 1-1", 2, 2)), (Matrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
}

TEST(ToSupervision, NoLinksFallsBackToUniform) {
  EXPECT_EQ(to_supervision(HardAlignment{2, 1, {}}), (Matrix{{0.5, 0.5, 0}, {0, 0, 1}}));
}

TEST(ToSupervision, EmptySourcePutsMassOnEol) {
  EXPECT_EQ(to_supervision(HardAlignment{0, 2, {}}), (Matrix{{1}, {1}, {1}}));
}

TEST(ToSupervision, EmptyTargetIsOnlyEolRow) {
  EXPECT_EQ(to_supervision(HardAlignment{3, 0, {}}), (Matrix{{0, 0, 0, 1}}));
}

TEST(ToSupervision, NearestLinkedNeighbourWinsOverFartherRight) {
  // rows 0 and 4 linked; row 1 is closer to 0, row 3 closer to 4, row 2 ties.
  const Matrix a = to_supervision(parse_pharaoh("0-0 1-4", 2, 5));
  EXPECT_EQ(a(1, 0), 1.0);
  EXPECT_EQ(a(2, 1), 1.0);
  EXPECT_EQ(a(3, 1), 1.0);
}

TEST(ToSupervision, MatchesBruteForceOnRandomAlignments) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const HardAlignment h = random_alignment(rng);
    const Matrix a = to_supervision(h);
    const auto expected = oracle::supervision(h);
    ASSERT_EQ(a.rows(), h.n + 1);
    ASSERT_EQ(a.cols(), h.m + 1);
    for (std::size_t r = 0; r <= h.n; ++r)
      for (std::size_t c = 0; c <= h.m; ++c) ASSERT_DOUBLE_EQ(a(r, c), expected[r][c]) << trial;
  }
}

TEST(ToSupervision, RowsAreDistributionsWithEolOneHot) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const HardAlignment h = random_alignment(rng);
    const Matrix a = to_supervision(h);
    EXPECT_TRUE(is_row_stochastic(a));
    for (std::size_t c = 0; c <= h.m; ++c) EXPECT_EQ(a(h.n, c), c == h.m ? 1.0 : 0.0);
    if (h.m > 0) {
      for (std::size_t r = 0; r < h.n; ++r) EXPECT_EQ(a(r, h.m), 0.0);
    }
  }
}

TEST(ToSupervision, FullyAlignedInputIsAFixedPoint) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    HardAlignment h = random_alignment(rng);
    if (h.m == 0) continue;
    for (std::size_t t = 0; t < h.n; ++t) h.links.insert({rng() % h.m, t});
    const Matrix once = to_supervision(h);
    // Re-derive links from the support of every word row and rebuild.
    HardAlignment again{h.m, h.n, {}};
    for (std::size_t t = 0; t < h.n; ++t)
      for (std::size_t s = 0; s < h.m; ++s)
        if (once(t, s) > 0) again.links.insert({s, t});
    EXPECT_EQ(to_supervision(again), once);
  }
}

TEST(IsRowStochastic, DetectsBadRows) {
  EXPECT_TRUE(is_row_stochastic(Matrix{{0.25, 0.75}}));
  EXPECT_FALSE(is_row_stochastic(Matrix{{0.5, 0.6}}));
  EXPECT_FALSE(is_row_stochastic(Matrix{{1.5, -0.5}}));
}

TEST(SupervisionFile, RoundTripIsExact) {
  testing::TempDir dir("sup");
  std::mt19937_64 rng(3);
  std::vector<Matrix> mats;
  for (int i = 0; i < 20; ++i) mats.push_back(to_supervision(random_alignment(rng, 6)));
  save_supervision(dir / "s", mats);
  EXPECT_EQ(load_supervision(dir / "s"), mats);
}

}  // namespace
}  // namespace sanmt
