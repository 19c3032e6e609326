#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sspcm {

/// Coordinate frames. `any` is a wildcard used by transforms that are not
/// tied to a specific frame; it matches every pose/heatmap frame.
enum class Frame { any, canonical, easy, hard, heatmap };

inline const char* frame_name(Frame f) {
  switch (f) {
    case Frame::any: return "any";
    case Frame::canonical: return "canonical";
    case Frame::easy: return "easy";
    case Frame::hard: return "hard";
    case Frame::heatmap: return "heatmap";
  }
  return "?";
}

/// One 2D keypoint. conf = 0 marks an invalid keypoint whose coordinates
/// must be ignored by consumers.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double conf = 0.0;

  bool valid() const { return conf > 0.0; }
};

struct Pose {
  std::vector<Keypoint> kps;
  Frame frame = Frame::canonical;
};

/// Grayscale image, row-major, values in [0, 1].
struct Image {
  int h = 0;
  int w = 0;
  std::vector<float> v;

  Image() = default;
  Image(int hh, int ww, float fill = 0.f) : h(hh), w(ww), v(static_cast<std::size_t>(hh) * ww, fill) {}

  float& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  float at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

/// K-channel score map, row-major per channel.
struct Heatmap {
  int k = 0;
  int h = 0;
  int w = 0;
  Frame frame = Frame::heatmap;
  std::vector<float> v;

  Heatmap() = default;
  Heatmap(int kk, int hh, int ww, Frame f = Frame::heatmap)
      : k(kk), h(hh), w(ww), frame(f), v(static_cast<std::size_t>(kk) * hh * ww, 0.f) {}

  float& at(int c, int y, int x) { return v[(static_cast<std::size_t>(c) * h + y) * w + x]; }
  float at(int c, int y, int x) const { return v[(static_cast<std::size_t>(c) * h + y) * w + x]; }

  float* channel(int c) { return v.data() + static_cast<std::size_t>(c) * h * w; }
  const float* channel(int c) const { return v.data() + static_cast<std::size_t>(c) * h * w; }
};

/// Diagonal length of a heatmap grid measured between opposite corner pixel
/// centers, i.e. sqrt((W-1)^2 + (H-1)^2).
inline double heatmap_diagonal(int hm_h, int hm_w) {
  const double w1 = hm_w - 1.0;
  const double h1 = hm_h - 1.0;
  return std::sqrt(std::fma(w1, w1, h1 * h1));
}

/// Invertible 2D transform. The matrix maps source pixel coordinates to
/// target pixel coordinates: (x', y') = (m0 x + m1 y + m2, m3 x + m4 y + m5).
/// rotation/scale/center record how the transform was built; the matrix is
/// authoritative. src/dst frames default to the wildcard.
struct Affine {
  std::array<double, 6> m{1, 0, 0, 0, 1, 0};
  double rotation_deg = 0.0;
  double scale = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Frame src = Frame::any;
  Frame dst = Frame::any;

  std::pair<double, double> apply(double x, double y) const {
    return {m[0] * x + m[1] * y + m[2], m[3] * x + m[4] * y + m[5]};
  }

  Affine with_frames(Frame s, Frame d) const {
    Affine a = *this;
    a.src = s;
    a.dst = d;
    return a;
  }
};

/// Rotation (counter-clockwise in the x-right/y-down convention) by
/// `rotation_deg` about `center`, then uniform scaling by `scale` about the
/// same point. The output frame shares the center point.
inline Affine make_affine(double rotation_deg, double scale, double cx, double cy) {
  if (!(scale > 0.0)) throw std::invalid_argument("make_affine: scale must be positive");
  Affine a;
  const double rad = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad) * scale;
  const double s = std::sin(rad) * scale;
  // p' = center + s*R*(p - center)
  a.m = {c, -s, cx - (c * cx - s * cy), s, c, cy - (s * cx + c * cy)};
  a.rotation_deg = rotation_deg;
  a.scale = scale;
  a.cx = cx;
  a.cy = cy;
  return a;
}

inline Affine invert(const Affine& t) {
  const double det = t.m[0] * t.m[4] - t.m[1] * t.m[3];
  if (det == 0.0) throw std::invalid_argument("invert: singular affine");
  Affine r;
  const double ia = t.m[4] / det;
  const double ib = -t.m[1] / det;
  const double ic = -t.m[3] / det;
  const double id = t.m[0] / det;
  r.m = {ia, ib, -(ia * t.m[2] + ib * t.m[5]), ic, id, -(ic * t.m[2] + id * t.m[5])};
  r.rotation_deg = -t.rotation_deg;
  r.scale = 1.0 / t.scale;
  r.cx = t.cx;
  r.cy = t.cy;
  r.src = t.dst;
  r.dst = t.src;
  return r;
}

/// compose(outer, inner) applies `inner` first: result = outer ∘ inner.
inline Affine compose(const Affine& outer, const Affine& inner) {
  Affine r;
  r.m = {outer.m[0] * inner.m[0] + outer.m[1] * inner.m[3],
         outer.m[0] * inner.m[1] + outer.m[1] * inner.m[4],
         outer.m[0] * inner.m[2] + outer.m[1] * inner.m[5] + outer.m[2],
         outer.m[3] * inner.m[0] + outer.m[4] * inner.m[3],
         outer.m[3] * inner.m[1] + outer.m[4] * inner.m[4],
         outer.m[3] * inner.m[2] + outer.m[4] * inner.m[5] + outer.m[5]};
  r.rotation_deg = outer.rotation_deg + inner.rotation_deg;
  r.scale = outer.scale * inner.scale;
  r.cx = inner.cx;
  r.cy = inner.cy;
  r.src = inner.src;
  r.dst = outer.dst;
  return r;
}

/// Conjugates an image-frame transform into a grid scaled by `s`
/// (e.g. s = 1/4 turns an image-space transform into heatmap space).
/// The linear part is unchanged; only the translation rescales.
inline Affine rescaled(const Affine& t, double s) {
  Affine r = t;
  r.m[2] *= s;
  r.m[5] *= s;
  r.cx *= s;
  r.cy *= s;
  return r;
}

namespace detail {
inline void check_frames(Frame value, Frame expected, const char* op) {
  if (expected != Frame::any && value != Frame::any && value != expected) {
    throw std::logic_error(std::string(op) + ": frame mismatch, got " + frame_name(value) +
                           ", transform expects " + frame_name(expected));
  }
}
}  // namespace detail

/// Renders one Gaussian per keypoint with amplitude 1 at the keypoint
/// position. Channels for invalid or out-of-grid keypoints are all zero.
inline Heatmap render_gaussian_heatmaps(const Pose& pose, double sigma, int hm_h, int hm_w) {
  if (!(sigma > 0.0)) throw std::invalid_argument("render_gaussian_heatmaps: sigma must be positive");
  if (hm_h <= 0 || hm_w <= 0) throw std::invalid_argument("render_gaussian_heatmaps: empty grid");
  Heatmap hm(static_cast<int>(pose.kps.size()), hm_h, hm_w, pose.frame);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t c = 0; c < pose.kps.size(); ++c) {
    const Keypoint& kp = pose.kps[c];
    if (!kp.valid()) continue;
    if (kp.x < 0.0 || kp.x > hm_w - 1.0 || kp.y < 0.0 || kp.y > hm_h - 1.0) continue;
    float* ch = hm.channel(static_cast<int>(c));
    for (int y = 0; y < hm_h; ++y) {
      const double dy = y - kp.y;
      for (int x = 0; x < hm_w; ++x) {
        const double dx = x - kp.x;
        ch[y * hm_w + x] = static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv2s2));
      }
    }
  }
  return hm;
}

/// Per-channel integer argmax; ties break to the first row-major occurrence.
/// conf is the peak value clamped to [0, 1]; an all-zero channel therefore
/// decodes to conf 0 (invalid).
inline Pose decode_argmax(const Heatmap& hm) {
  if (hm.k <= 0 || hm.h <= 0 || hm.w <= 0) throw std::invalid_argument("decode_argmax: empty heatmap");
  Pose pose;
  pose.frame = Frame::heatmap;
  pose.kps.resize(hm.k);
  for (int c = 0; c < hm.k; ++c) {
    const float* ch = hm.channel(c);
    int best = 0;
    float best_v = ch[0];
    const int n = hm.h * hm.w;
    for (int i = 1; i < n; ++i) {
      if (ch[i] > best_v) {
        best_v = ch[i];
        best = i;
      }
    }
    Keypoint& kp = pose.kps[c];
    kp.x = best % hm.w;
    kp.y = best / hm.w;
    kp.conf = std::clamp(static_cast<double>(best_v), 0.0, 1.0);
  }
  return pose;
}

/// Maps keypoint coordinates through `t`. Invalid keypoints pass through
/// untouched (their coordinates are undefined anyway).
inline Pose warp_points(const Pose& pose, const Affine& t) {
  detail::check_frames(pose.frame, t.src, "warp_points");
  Pose out = pose;
  out.frame = (t.dst == Frame::any) ? pose.frame : t.dst;
  for (Keypoint& kp : out.kps) {
    if (!kp.valid()) continue;
    auto [x, y] = t.apply(kp.x, kp.y);
    kp.x = x;
    kp.y = y;
  }
  return out;
}

namespace detail {

/// Bilinear sample at (x, y); corners outside the grid contribute `fill`.
inline float bilinear_at(const float* ch, int h, int w, double x, double y, float fill) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double dx = x - x0;
  const double dy = y - y0;
  auto sample = [&](int yy, int xx) -> double {
    if (xx < 0 || xx >= w || yy < 0 || yy >= h) return fill;
    return ch[yy * w + xx];
  };
  const double v00 = sample(y0, x0);
  const double v01 = sample(y0, x0 + 1);
  const double v10 = sample(y0 + 1, x0);
  const double v11 = sample(y0 + 1, x0 + 1);
  return static_cast<float>((1.0 - dy) * ((1.0 - dx) * v00 + dx * v01) +
                            dy * ((1.0 - dx) * v10 + dx * v11));
}

}  // namespace detail

/// Inverse-mapped bilinear warp; source samples outside the grid contribute 0.
inline Heatmap warp_heatmap(const Heatmap& hm, const Affine& t, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("warp_heatmap: empty output");
  detail::check_frames(hm.frame, t.src, "warp_heatmap");
  const Affine inv = invert(t);
  Heatmap out(hm.k, out_h, out_w, (t.dst == Frame::any) ? hm.frame : t.dst);
  for (int c = 0; c < hm.k; ++c) {
    const float* src = hm.channel(c);
    float* dst = out.channel(c);
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        auto [sx, sy] = inv.apply(x, y);
        dst[y * out_w + x] = detail::bilinear_at(src, hm.h, hm.w, sx, sy, 0.f);
      }
    }
  }
  return out;
}

/// As warp_heatmap but with a constant fill value outside the source image.
inline Image warp_image(const Image& img, const Affine& t, int out_h, int out_w, float fill) {
  if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("warp_image: empty output");
  const Affine inv = invert(t);
  Image out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      auto [sx, sy] = inv.apply(x, y);
      out.at(y, x) = detail::bilinear_at(img.v.data(), img.h, img.w, sx, sy, fill);
    }
  }
  return out;
}

}  // namespace sspcm
