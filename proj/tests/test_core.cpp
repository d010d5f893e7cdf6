#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"

using namespace eegasym;
using eegasym::testing::make_recording;

namespace {

Recording standard_recording(double fs, std::size_t n) {
  std::vector<std::vector<double>> data(9, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < 9; ++c)
    for (std::size_t i = 0; i < n; ++i) data[c][i] = std::sin(0.01 * static_cast<double>(c * n + i));
  return make_recording(data, fs, Montage::standard().channel_labels());
}

bool has_kind(const std::vector<Violation>& v, Violation::Kind k) {
  for (const auto& x : v)
    if (x.kind == k) return true;
  return false;
}

}  // namespace

TEST(ValidateRecording, FiniteNineChannelMatrixIsValid) {
  EXPECT_TRUE(validate_recording(standard_recording(256.0, 256), BandSet::standard()).empty());
}

TEST(ValidateRecording, RateBelowTwiceTopEdgeIsNyquistViolation) {
  const auto v = validate_recording(standard_recording(80.0, 256), BandSet::standard());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::Nyquist);
  EXPECT_EQ(v[0].message.rfind("Nyquist", 0), 0u);
}

TEST(ValidateRecording, RateExactlyTwiceTopEdgeIsRejected) {
  EXPECT_TRUE(has_kind(validate_recording(standard_recording(100.0, 256), BandSet::standard()),
                       Violation::Kind::Nyquist));
}

TEST(ValidateRecording, NanSampleNamesChannelAndIndex) {
  auto r = standard_recording(256.0, 256);
  r.data[4][17] = std::numeric_limits<double>::quiet_NaN();
  const auto v = validate_recording(r, BandSet::standard());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, Violation::Kind::NonFinite);
  EXPECT_EQ(v[0].message, "non-finite at (4, 17)");
}

TEST(ValidateRecording, InfinityIsNonFinite) {
  auto r = standard_recording(256.0, 64);
  r.data[0][0] = -std::numeric_limits<double>::infinity();
  EXPECT_TRUE(has_kind(validate_recording(r, BandSet::standard()), Violation::Kind::NonFinite));
}

TEST(ValidateRecording, RaggedAndEmptyAndLabelMismatch) {
  auto r = standard_recording(256.0, 64);
  r.data[2].pop_back();
  EXPECT_TRUE(has_kind(validate_recording(r, BandSet::standard()), Violation::Kind::Ragged));

  Recording empty;
  EXPECT_TRUE(has_kind(validate_recording(empty, BandSet::standard()), Violation::Kind::Empty));

  auto mismatch = standard_recording(256.0, 64);
  mismatch.channels.pop_back();
  EXPECT_TRUE(has_kind(validate_recording(mismatch, BandSet::standard()), Violation::Kind::ChannelCount));
}

TEST(BandSet, StandardTilesHalfToFifty) {
  const auto b = BandSet::standard();
  ASSERT_EQ(b.size(), 5u);
  EXPECT_DOUBLE_EQ(b[0].low_hz, 0.5);
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_DOUBLE_EQ(b[i].low_hz, b[i - 1].high_hz);
  EXPECT_DOUBLE_EQ(b.highest_edge(), 50.0);
}

TEST(BandSet, EdgesAreHalfOpenExceptTop) {
  const auto b = BandSet::standard();
  EXPECT_TRUE(b.contains(2, 8.0));
  EXPECT_FALSE(b.contains(1, 8.0));
  EXPECT_FALSE(b.contains(2, 13.0));
  EXPECT_TRUE(b.contains(4, 50.0));
  EXPECT_FALSE(b.contains(4, 50.5));
  EXPECT_FALSE(b.contains(0, 0.0));
}

TEST(BandSet, RejectsOverlapAndBadEdges) {
  EXPECT_THROW(BandSet({{"a", 1.0, 5.0}, {"b", 4.0, 8.0}}), std::invalid_argument);
  EXPECT_THROW(BandSet({{"a", 5.0, 5.0}}), std::invalid_argument);
  EXPECT_THROW(BandSet({{"a", 0.0, 5.0}}), std::invalid_argument);
  EXPECT_THROW(BandSet(std::vector<Band>{}), std::invalid_argument);
  EXPECT_THROW(BandSet::standard().index_of("Mu"), std::invalid_argument);
}

TEST(Montage, StandardPairsAndMirror) {
  const auto m = Montage::standard();
  EXPECT_EQ(m.channel_labels().size(), 9u);
  EXPECT_EQ(m.pair(Region::Frontal), (ChannelPair{"F3", "F4"}));
  EXPECT_EQ(m.pair(Region::Parietal), (ChannelPair{"P3", "P4"}));
  const auto mm = m.mirrored();
  EXPECT_EQ(mm.pair(Region::Central), (ChannelPair{"C4", "C3"}));
  EXPECT_EQ(mm.mirrored(), m);
}

TEST(Montage, PairMustReferenceKnownChannels) {
  EXPECT_THROW(Montage({"F3"}, {{Region::Frontal, {"F3", "F4"}}}), std::invalid_argument);
}

TEST(Markers, ValidateRules) {
  PhaseMarkers m;
  m[Phase::PreB] = {0, 100};
  m[Phase::VRX] = {100, 200};
  m[Phase::PostB] = {250, 300};
  EXPECT_NO_THROW(validate_markers(m, 300));

  auto message = [](const PhaseMarkers& mk, std::size_t n) {
    try {
      validate_markers(mk, n);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(message(m, 299).rfind("out of bounds", 0), 0u);
  auto overlap = m;
  overlap[Phase::VRX] = {90, 200};
  EXPECT_EQ(message(overlap, 300).rfind("overlap", 0), 0u);
  auto order = m;
  order[Phase::PostB] = {50, 60};
  EXPECT_EQ(message(order, 300).rfind("phase order", 0), 0u);
  auto empty = m;
  empty[Phase::PreB] = {10, 10};
  EXPECT_EQ(message(empty, 300).rfind("empty span", 0), 0u);
}

TEST(Names, RoundTrip) {
  for (Phase p : kPhases) EXPECT_EQ(phase_from_string(to_string(p)), p);
  for (Region r : kRegions) EXPECT_EQ(region_from_string(to_string(r)), r);
  EXPECT_THROW(phase_from_string("Rest"), std::invalid_argument);
}

TEST(Tables, BandPowersLookupByLabel) {
  BandPowers bp{{"F3", "F4"}, {"Alpha"}, {3.0, 5.0}};
  EXPECT_EQ(bp.at("F4", 0), 5.0);
  EXPECT_THROW(bp.at("Cz", 0), std::invalid_argument);
}

TEST(Recording, SliceCopiesRange) {
  auto r = make_recording({{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}});
  const auto s = r.slice(1, 4);
  EXPECT_EQ(s.data[1], (std::vector<double>{6, 7, 8}));
  EXPECT_EQ(s.channels, r.channels);
}
