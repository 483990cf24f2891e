#include <gtest/gtest.h>

#include <random>

#include "trobench/baselines.hpp"

namespace trobench {
namespace {

SynthSpec translating_square() {
  SynthSpec s;
  s.name = "square";
  s.frame_width = 96;
  s.frame_height = 64;
  s.target_width = 10;
  s.target_height = 10;
  s.start_x = 5;
  s.start_y = 10;
  s.velocity_x = 2.0;
  s.velocity_y = 1.0;
  s.length = 30;
  s.seed = 3;
  return s;
}

// Target and its mirror image meet exactly on the mirror line; with a left-right
// symmetric texture the two are indistinguishable there.
SynthSpec crossing_spec() {
  SynthSpec s;
  s.name = "crossing";
  s.frame_width = 96;
  s.frame_height = 48;
  s.target_width = 12;
  s.target_height = 12;
  s.start_x = 6;  // centered on the mirror after 6 frames at 6 px/frame
  s.start_y = 18;
  s.velocity_x = 6.0;  // half the width: the pair separates fully one step later
  s.mirrored_distractor = true;
  s.mirror_x = 48;
  s.pattern = TargetPattern::Symmetric;
  s.length = 14;
  s.seed = 5;
  return s;
}

std::vector<double> center_errors(const TrackerOutput& out, const Sequence& seq) {
  return score_frames(out, seq).center_errors;
}

TEST(StaticTracker, StationaryTargetScoresOne) {
  SynthSpec spec;
  spec.noise = 0.05;
  const Sequence seq = generate(spec);
  StaticTracker t;
  const TrackerOutput out = run_ope(t, seq);
  EXPECT_EQ(out.boxes.size(), seq.length());
  for (double s : score_frames(out, seq).overlaps) EXPECT_EQ(s, 1.0);
  EXPECT_GE(success_curve(out, seq).auc, 0.99);
}

TEST(StaticTracker, LosesTargetMovedByItsWidth) {
  SynthSpec spec = translating_square();
  spec.velocity_y = 0.0;
  const Sequence seq = generate(spec);
  StaticTracker t;
  const auto overlaps = score_frames(run_ope(t, seq), seq).overlaps;
  EXPECT_EQ(overlaps[5], 0.0);  // moved by exactly one width (10 px)
  EXPECT_GT(overlaps[4], 0.0);
  EXPECT_EQ(overlaps.back(), 0.0);
}

TEST(Zncc, BoundsAndExactMatch) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GrayFrame img(20, 20);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c) img.at(r, c) = u(rng);
  GrayFrame patch(5, 6);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 6; ++c) patch.at(r, c) = img.at(7 + r, 3 + c);
  EXPECT_NEAR(zncc(img, 7, 3, patch), 1.0, 1e-12);
  for (int r = 0; r <= 15; ++r) {
    for (int c = 0; c <= 14; ++c) {
      const double v = zncc(img, r, c, patch);
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_EQ(zncc(GrayFrame(8, 8, 0.5), 0, 0, patch), 0.0);
}

TEST(NccTracker, IdenticalFramesStayPut) {
  SynthSpec spec;
  spec.noise = 0.0;
  const Sequence seq = generate(spec);
  NccTracker t(6);
  t.init(seq.frames[0], *seq.labels[0].box);
  EXPECT_EQ(t.step(seq.frames[0]), *seq.labels[0].box);
  EXPECT_NEAR(t.last_score(), 1.0, 1e-12);
}

TEST(NccTracker, TracksNoiseFreeTranslationExactly) {
  const Sequence seq = generate(translating_square());
  NccTracker t(6);
  const TrackerOutput out = run_ope(t, seq);
  for (double e : center_errors(out, seq)) EXPECT_EQ(e, 0.0);
}

TEST(NccTracker, LocksOntoReflectionWhenCrossingMirror) {
  const Sequence seq = generate(crossing_spec());
  NccTracker t(7);
  const TrackerOutput out = run_ope(t, seq);
  const auto errs = center_errors(out, seq);
  const double width = crossing_spec().target_width;
  EXPECT_TRUE(std::any_of(errs.begin(), errs.end(), [&](double e) { return e > width; }));
  // Before the meeting point the tracker is exact.
  for (int i = 0; i <= 6; ++i) EXPECT_EQ(errs[static_cast<std::size_t>(i)], 0.0) << i;
}

TEST(NccTracker, FlatTemplateFallsBackToStatic) {
  SynthSpec spec;
  spec.background = 0.5;
  const Sequence seq = generate(spec);
  Warnings w;
  NccTracker t(4, &w);
  const BoundingBox flat{40, 2, 8, 8};  // background only
  t.init(seq.frames[0], flat);
  EXPECT_TRUE(t.degenerate());
  EXPECT_EQ(w.size(), 1u);
  EXPECT_EQ(t.step(seq.frames[1]), flat);
}

TEST(NccTracker, RejectsTemplateOutsideFrame) {
  NccTracker t;
  EXPECT_THROW(t.init(GrayFrame(10, 10), {5, 5, 8, 8}), std::invalid_argument);
}

TEST(Generator, ZeroVelocityGivesConstantTruth) {
  SynthSpec spec;
  spec.length = 62;
  const Sequence seq = generate(spec);
  EXPECT_EQ(seq.length(), 62u);
  EXPECT_EQ(seq.frames.size(), 62u);
  for (const auto& l : seq.labels) EXPECT_EQ(l.box, seq.labels[0].box);
  EXPECT_FALSE(seq.attributes.has(Attribute::FM));
  EXPECT_TRUE(seq.attributes.has(Attribute::LR));  // 12 x 12 target
}

TEST(Generator, DeterministicUnderSeed) {
  SynthSpec spec = crossing_spec();
  spec.noise = 0.03;
  spec.pattern = TargetPattern::Random;
  const Sequence a = generate(spec);
  const Sequence b = generate(spec);
  EXPECT_EQ(a, b);
  spec.seed += 1;
  EXPECT_NE(generate(spec).frames, a.frames);
}

TEST(Generator, FramesAreQuantized) {
  SynthSpec spec;
  spec.noise = 0.1;
  for (const auto& f : generate(spec).frames) {
    for (double v : f.pixels()) EXPECT_EQ(v, std::round(v * 255.0) / 255.0);
  }
}

TEST(Generator, TruthFollowsTargetNotDistractor) {
  const SynthSpec spec = crossing_spec();
  const Sequence seq = generate(spec);
  for (int t = 0; t < spec.length; ++t) {
    EXPECT_EQ(seq.labels[t].box->x, spec.start_x + spec.velocity_x * t);
  }
}

TEST(Generator, DeclaredAndDerivedAttributes) {
  SynthSpec spec = translating_square();
  spec.velocity_x = 3.0;  // shift 3.16 >= 0.2 * 10
  spec.length = 20;
  spec.declared = {Attribute::BC};
  const Sequence seq = generate(spec);
  EXPECT_TRUE(seq.attributes.has(Attribute::BC));
  EXPECT_TRUE(seq.attributes.has(Attribute::FM));
  EXPECT_FALSE(seq.attributes.has(Attribute::ARC));
}

TEST(Generator, RejectsBadSpecs) {
  SynthSpec spec = translating_square();
  spec.length = 1;
  EXPECT_THROW(generate(spec), std::invalid_argument);
  spec = translating_square();
  spec.velocity_x = 10.0;  // leaves the 96 px frame
  EXPECT_THROW(generate(spec), std::invalid_argument);
  spec.allow_out_of_view = true;
  const Sequence seq = generate(spec);
  EXPECT_TRUE(seq.labels.back().is_absent());
  EXPECT_TRUE(seq.attributes.has(Attribute::OV));
}

TEST(SynthSpecJson, RoundTrip) {
  SynthSpec spec = crossing_spec();
  spec.declared = {Attribute::BC, Attribute::POC};
  spec.noise = 0.125;
  const SynthSpec back = synth_spec_from_json(synth_spec_to_json(spec));
  EXPECT_EQ(generate(back), generate(spec));
  EXPECT_THROW(synth_spec_from_json(R"({"pattern": "plaid"})"), std::invalid_argument);
  EXPECT_THROW(synth_spec_from_json(R"({"attributes": ["XX"]})"), std::invalid_argument);
}

TEST(ReflectionSuite, StationaryHalfIsStaticFriendly) {
  const auto specs = reflection_suite(7);
  ASSERT_EQ(specs.size(), 20u);
  for (std::size_t i = 0; i < 10; ++i) {
    const Sequence seq = generate(specs[i]);
    StaticTracker t;
    EXPECT_GE(success_curve(run_ope(t, seq), seq).auc, 0.99);
  }
  for (std::size_t i = 10; i < 20; ++i) {
    EXPECT_TRUE(specs[i].mirrored_distractor);
    EXPECT_NO_THROW(generate(specs[i]));
  }
}

TEST(MakeTracker, Names) {
  EXPECT_NE(make_tracker("static"), nullptr);
  EXPECT_NE(make_tracker("ncc"), nullptr);
  EXPECT_THROW(make_tracker("kcf"), std::invalid_argument);
}

}  // namespace
}  // namespace trobench
