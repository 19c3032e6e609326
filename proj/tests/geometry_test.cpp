#include "sspcm/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "sspcm/rng.hpp"

using namespace sspcm;

namespace {

Pose single_kp(double x, double y, double conf = 1.0) {
  Pose p;
  p.kps.push_back({x, y, conf});
  return p;
}

// Independent brute-force Gaussian rendering used as the oracle for
// render_gaussian_heatmaps.
double gaussian_oracle(double kx, double ky, int px, int py, double sigma) {
  const double dx = px - kx;
  const double dy = py - ky;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

}  // namespace

TEST(RenderGaussian, IntegerPeakValues) {
  Heatmap hm = render_gaussian_heatmaps(single_kp(8, 6), 1.0, 16, 12);
  EXPECT_FLOAT_EQ(hm.at(0, 6, 8), 1.0f);
  EXPECT_NEAR(hm.at(0, 6, 9), std::exp(-0.5), 1e-6);
}

TEST(RenderGaussian, InvisibleKeypointGivesZeroChannel) {
  Heatmap hm = render_gaussian_heatmaps(single_kp(8, 6, 0.0), 1.0, 16, 12);
  for (float v : hm.v) EXPECT_EQ(v, 0.f);
}

TEST(RenderGaussian, OutOfGridKeypointGivesZeroChannel) {
  Heatmap hm = render_gaussian_heatmaps(single_kp(-0.5, 6), 1.0, 16, 12);
  for (float v : hm.v) EXPECT_EQ(v, 0.f);
  hm = render_gaussian_heatmaps(single_kp(8, 15.2), 1.0, 16, 12);
  for (float v : hm.v) EXPECT_EQ(v, 0.f);
}

TEST(RenderGaussian, FractionalKeypointMatchesBruteForce) {
  const double sigma = 2.0;
  Heatmap hm = render_gaussian_heatmaps(single_kp(3.5, 2.5), sigma, 16, 12);
  // Full-grid comparison against the independent formula evaluation.
  float max_v = 0.f;
  int max_i = -1;
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 12; ++x) {
      const float expected = static_cast<float>(gaussian_oracle(3.5, 2.5, x, y, sigma));
      EXPECT_NEAR(hm.at(0, y, x), expected, 1e-6f);
      if (hm.at(0, y, x) > max_v) {
        max_v = hm.at(0, y, x);
        max_i = y * 12 + x;
      }
    }
  }
  // Max must be one of the four neighbours of (3.5, 2.5), all with value
  // exp(-(0.25+0.25)/(2*sigma^2)).
  EXPECT_NEAR(max_v, std::exp(-0.5 / 8.0), 1e-6);
  const int mx = max_i % 12, my = max_i / 12;
  EXPECT_TRUE((mx == 3 || mx == 4) && (my == 2 || my == 3));
}

TEST(RenderGaussian, RejectsBadArguments) {
  EXPECT_THROW(render_gaussian_heatmaps(single_kp(1, 1), 0.0, 16, 12), std::invalid_argument);
  EXPECT_THROW(render_gaussian_heatmaps(single_kp(1, 1), -1.0, 16, 12), std::invalid_argument);
  EXPECT_THROW(render_gaussian_heatmaps(single_kp(1, 1), 1.0, 0, 12), std::invalid_argument);
}

TEST(DecodeArgmax, SingleMax) {
  Heatmap hm(1, 16, 12);
  hm.at(0, 7, 10) = 0.9f;
  Pose p = decode_argmax(hm);
  EXPECT_EQ(p.frame, Frame::heatmap);
  EXPECT_EQ(p.kps[0].x, 10);
  EXPECT_EQ(p.kps[0].y, 7);
  EXPECT_DOUBLE_EQ(p.kps[0].conf, 0.9f);
}

TEST(DecodeArgmax, AllZeroChannelIsInvalid) {
  Heatmap hm(1, 16, 12);
  Pose p = decode_argmax(hm);
  EXPECT_EQ(p.kps[0].x, 0);
  EXPECT_EQ(p.kps[0].y, 0);
  EXPECT_EQ(p.kps[0].conf, 0.0);
  EXPECT_FALSE(p.kps[0].valid());
}

TEST(DecodeArgmax, TieBreaksToFirstRowMajor) {
  Heatmap hm(1, 16, 12);
  hm.at(0, 2, 2) = 0.5f;
  hm.at(0, 5, 5) = 0.5f;
  Pose p = decode_argmax(hm);
  EXPECT_EQ(p.kps[0].x, 2);
  EXPECT_EQ(p.kps[0].y, 2);
}

TEST(DecodeArgmax, ConfClampedToOne) {
  Heatmap hm(1, 4, 4);
  hm.at(0, 1, 2) = 3.7f;
  EXPECT_DOUBLE_EQ(decode_argmax(hm).kps[0].conf, 1.0);
}

TEST(DecodeArgmax, RepeatDecodingIsBitwiseIdentical) {
  Rng rng(99);
  Heatmap hm(3, 16, 12);
  for (float& v : hm.v) v = static_cast<float>(rng.uniform());
  Pose a = decode_argmax(hm);
  Pose b = decode_argmax(hm);
  for (std::size_t i = 0; i < a.kps.size(); ++i) {
    EXPECT_EQ(std::memcmp(&a.kps[i], &b.kps[i], sizeof(Keypoint)), 0);
  }
}

TEST(MakeAffine, IdentityMatrix) {
  Affine t = make_affine(0.0, 1.0, 5.0, 5.0);
  const std::array<double, 6> expect{1, 0, 0, 0, 1, 0};
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(t.m[i], expect[i], 1e-12);
}

TEST(MakeAffine, Rotate90AboutOrigin) {
  // Counter-clockwise in the y-down convention: (1, 0) -> (0, 1).
  Affine t = make_affine(90.0, 1.0, 0.0, 0.0);
  auto [x, y] = t.apply(1.0, 0.0);
  EXPECT_NEAR(x, 0.0, 1e-12);
  EXPECT_NEAR(y, 1.0, 1e-12);
}

TEST(MakeAffine, InverseRoundTripsPoint) {
  Affine t = make_affine(37.0, 1.1, 24.0, 32.0);
  Affine id = compose(invert(t), t);
  auto [x, y] = id.apply(13.2, 7.7);
  EXPECT_NEAR(x, 13.2, 1e-9);
  EXPECT_NEAR(y, 7.7, 1e-9);
}

TEST(MakeAffine, RejectsNonPositiveScale) {
  EXPECT_THROW(make_affine(0.0, 0.0, 0, 0), std::invalid_argument);
  EXPECT_THROW(make_affine(0.0, -2.0, 0, 0), std::invalid_argument);
}

TEST(MakeAffine, ComposeInvertIsIdentityOver1000RandomTransforms) {
  Rng rng(4242);
  for (int i = 0; i < 1000; ++i) {
    Affine t = make_affine(rng.uniform(-180, 180), rng.uniform(0.3, 3.0), rng.uniform(-20, 20),
                           rng.uniform(-20, 20));
    Affine id = compose(invert(t), t);
    const std::array<double, 6> expect{1, 0, 0, 0, 1, 0};
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(id.m[j], expect[j], 1e-9);
  }
}

TEST(MakeAffine, CompositionAssociativeOnPoints) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    Affine a = make_affine(rng.uniform(-60, 60), rng.uniform(0.75, 1.25), 6, 8);
    Affine b = make_affine(rng.uniform(-60, 60), rng.uniform(0.75, 1.25), 3, 2);
    const double px = rng.uniform(-10, 10), py = rng.uniform(-10, 10);
    auto [x1, y1] = a.apply(px, py);
    auto [x2, y2] = b.apply(x1, y1);
    auto [x3, y3] = compose(b, a).apply(px, py);
    EXPECT_NEAR(x2, x3, 1e-9);
    EXPECT_NEAR(y2, y3, 1e-9);
  }
}

TEST(WarpPoints, IdentityKeepsPose) {
  Pose p = single_kp(3.25, 4.5);
  p.kps.push_back({1, 2, 0.0});
  Pose q = warp_points(p, Affine{});
  EXPECT_EQ(q.kps[0].x, 3.25);
  EXPECT_EQ(q.kps[0].y, 4.5);
  EXPECT_EQ(q.kps[1].conf, 0.0);
  EXPECT_EQ(q.frame, p.frame);
}

TEST(WarpPoints, ScaleAboutOrigin) {
  Pose q = warp_points(single_kp(3, 4), make_affine(0.0, 2.0, 0, 0));
  EXPECT_NEAR(q.kps[0].x, 6.0, 1e-12);
  EXPECT_NEAR(q.kps[0].y, 8.0, 1e-12);
}

TEST(WarpPoints, FrameMismatchIsContractViolation) {
  Pose p = single_kp(1, 1);
  p.frame = Frame::canonical;
  Affine t = make_affine(10, 1.0, 0, 0).with_frames(Frame::easy, Frame::hard);
  EXPECT_THROW(warp_points(p, t), std::logic_error);
  // Matching frame passes and retags.
  t.src = Frame::canonical;
  EXPECT_EQ(warp_points(p, t).frame, Frame::hard);
}

TEST(WarpHeatmap, IdentityIsBitwiseEqual) {
  Rng rng(11);
  Heatmap hm(2, 16, 12);
  for (float& v : hm.v) v = static_cast<float>(rng.uniform());
  Heatmap out = warp_heatmap(hm, Affine{}, 16, 12);
  EXPECT_EQ(std::memcmp(out.v.data(), hm.v.data(), hm.v.size() * sizeof(float)), 0);
}

TEST(WarpHeatmap, ZeroStaysZero) {
  Heatmap hm(1, 16, 12);
  Heatmap out = warp_heatmap(hm, make_affine(33.0, 1.2, 6, 8), 16, 12);
  for (float v : out.v) EXPECT_EQ(v, 0.f);
}

TEST(WarpHeatmap, ValuesBoundedBySourceRange) {
  Rng rng(5);
  Heatmap hm = render_gaussian_heatmaps(single_kp(5, 7), 1.5, 16, 12);
  for (int i = 0; i < 50; ++i) {
    Affine t = make_affine(rng.uniform(-60, 60), rng.uniform(0.75, 1.25), 5.5, 7.5);
    Heatmap out = warp_heatmap(hm, t, 16, 12);
    for (float v : out.v) {
      EXPECT_GE(v, 0.f);
      EXPECT_LE(v, 1.f + 1e-6f);
    }
  }
}

TEST(WarpHeatmap, RejectsEmptyOutput) {
  Heatmap hm(1, 4, 4);
  EXPECT_THROW(warp_heatmap(hm, Affine{}, 0, 4), std::invalid_argument);
}

// decode(warp(hm)) must track warp_points(decode(hm)) within one heatmap
// pixel; this is the two-route consistency check for peak tracking.
TEST(WarpHeatmap, PeakTracksWarpedPointRotation90) {
  Heatmap hm = render_gaussian_heatmaps(single_kp(8, 6), 1.0, 16, 12);
  Affine t = make_affine(90.0, 1.0, 5.5, 7.5);
  Pose via_points = warp_points(decode_argmax(hm), t);
  Pose via_heatmap = decode_argmax(warp_heatmap(hm, t, 16, 12));
  EXPECT_NEAR(via_heatmap.kps[0].x, via_points.kps[0].x, 1.0);
  EXPECT_NEAR(via_heatmap.kps[0].y, via_points.kps[0].y, 1.0);
}

TEST(WarpImage, IdentityIsBitwiseEqual) {
  Rng rng(13);
  Image img(16, 12);
  for (float& v : img.v) v = static_cast<float>(rng.uniform());
  Image out = warp_image(img, Affine{}, 16, 12, 0.5f);
  EXPECT_EQ(std::memcmp(out.v.data(), img.v.data(), img.v.size() * sizeof(float)), 0);
}

TEST(WarpImage, ConstantImageKeepsConstantInterior) {
  Image img(16, 12, 0.25f);
  Affine t = make_affine(30.0, 1.0, 5.5, 7.5);
  Image out = warp_image(img, t, 16, 12, 0.9f);
  // Center pixels map well inside the source; they must stay constant.
  for (int y = 6; y <= 9; ++y)
    for (int x = 4; x <= 7; ++x) EXPECT_NEAR(out.at(y, x), 0.25f, 1e-6f);
}

TEST(WarpImage, PeakTracking) {
  Image img(16, 12, 0.f);
  img.at(6, 8) = 1.f;
  Affine t = make_affine(-90.0, 1.0, 5.5, 7.5);
  auto [ex, ey] = t.apply(8.0, 6.0);
  Image out = warp_image(img, t, 16, 12, 0.f);
  int best = 0;
  for (int i = 1; i < 16 * 12; ++i)
    if (out.v[i] > out.v[best]) best = i;
  EXPECT_NEAR(best % 12, ex, 1.0);
  EXPECT_NEAR(best / 12, ey, 1.0);
}

// Round trip: decode(render(p)) == p exactly for integer keypoints, over the
// full sigma range the pipeline uses.
TEST(GeometryProperties, EncodeDecodeRoundTripIntegerKeypoints) {
  Rng rng(21);
  for (double sigma : {0.5, 1.0, 2.0, 4.0}) {
    for (int i = 0; i < 200; ++i) {
      const int x = rng.uniform_int(12);
      const int y = rng.uniform_int(16);
      Pose p = single_kp(x, y);
      Pose q = decode_argmax(render_gaussian_heatmaps(p, sigma, 16, 12));
      ASSERT_EQ(q.kps[0].x, x) << "sigma=" << sigma;
      ASSERT_EQ(q.kps[0].y, y) << "sigma=" << sigma;
      ASSERT_DOUBLE_EQ(q.kps[0].conf, 1.0);
    }
  }
}

// Warp/decode commutation over random transforms with integer-pixel peaks
// kept away from the border (the acceptance suite runs the full 1000-case
// version). Fractional peaks are excluded: argmax decoding quantizes each
// route independently, so the 1 px bound only applies to on-grid peaks.
TEST(GeometryProperties, WarpDecodeCommutationSample) {
  Rng rng(31);
  int checked = 0;
  while (checked < 200) {
    const double px = 3 + rng.uniform_int(12 - 6);
    const double py = 3 + rng.uniform_int(16 - 6);
    Affine t = make_affine(rng.uniform(-60, 60), rng.uniform(0.75, 1.25), 5.5, 7.5);
    auto [qx, qy] = t.apply(px, py);
    if (qx < 3.0 || qx > 8.0 || qy < 3.0 || qy > 12.0) continue;  // keep target in-grid
    Heatmap hm = render_gaussian_heatmaps(single_kp(px, py), 1.0, 16, 12);
    Pose via_points = warp_points(decode_argmax(hm), t);
    Pose via_heatmap = decode_argmax(warp_heatmap(hm, t, 16, 12));
    const double dx = via_heatmap.kps[0].x - via_points.kps[0].x;
    const double dy = via_heatmap.kps[0].y - via_points.kps[0].y;
    ASSERT_LE(std::sqrt(dx * dx + dy * dy), 1.0 + 1e-9)
        << "peak (" << px << "," << py << ") rot " << t.rotation_deg << " scale " << t.scale;
    ++checked;
  }
}

TEST(HeatmapDiagonal, MatchesCornerDistance) {
  // Opposite corner argmaxes must give a normalized distance of exactly 1.
  EXPECT_DOUBLE_EQ(heatmap_diagonal(16, 12), std::sqrt(15.0 * 15.0 + 11.0 * 11.0));
  EXPECT_GT(heatmap_diagonal(2, 1), 0.0);
}
