#include <gtest/gtest.h>

#include "support.hpp"

using namespace eegasym;
using eegasym::testing::frontal_alpha_outcome;

TEST(MonteCarlo, PairwisePhaseContrastsAreDetected) {
  int pre_vrx = 0, vrx_post = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    CohortSpec c;
    c.seed = seed;
    const auto o = frontal_alpha_outcome(c);
    if (o.pre_vrx.p < 0.05) ++pre_vrx;
    if (o.vrx_post.p < 0.05) ++vrx_post;
  }
  EXPECT_GE(pre_vrx, 95);
  EXPECT_GE(vrx_post, 95);
}

TEST(MonteCarlo, NullRegressionIsCalibrated) {
  // Zero slope: the fraction of seeds with p < .05 should sit near alpha.
  // One-shot Cook's exclusion roughly doubles it (0.104 over 20000 pure
  // simulated n = 40 draws), so that rate gets its own band: 0.104 +/- 3 sd
  // at 200 seeds.
  int ols = 0, excluded = 0;
  const int seeds = 200;
  for (int seed = 1; seed <= seeds; ++seed) {
    CohortSpec c;
    c.seed = 5000 + static_cast<std::uint64_t>(seed);
    c.lead_in_s = 0.0;
    c.phase_duration_s = {30.0, 30.0, 30.0};
    c.link->slope = 0.0;
    const auto o = frontal_alpha_outcome(c);
    if (o.pre_ols.p < 0.05) ++ols;
    if (o.pre_regression.p < 0.05) ++excluded;
  }
  const double rate = static_cast<double>(ols) / seeds;
  EXPECT_GE(rate, 0.01);
  EXPECT_LE(rate, 0.10);
  const double after_cooks = static_cast<double>(excluded) / seeds;
  EXPECT_GE(after_cooks, 0.04);
  EXPECT_LE(after_cooks, 0.17);
}
