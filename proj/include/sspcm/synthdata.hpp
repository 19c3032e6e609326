#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sspcm/geometry.hpp"
#include "sspcm/rng.hpp"

namespace sspcm {

enum class Split { labeled, unlabeled, test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::labeled: return "labeled";
    case Split::unlabeled: return "unlabeled";
    case Split::test: return "test";
  }
  return "?";
}

inline Split split_from_name(const std::string& s) {
  if (s == "labeled") return Split::labeled;
  if (s == "unlabeled") return Split::unlabeled;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split name: " + s);
}

struct SkeletonEdge {
  int parent = 0;
  int child = 0;
  double len_min = 0, len_max = 0;        // pixels
  double ang_min_deg = 0, ang_max_deg = 0;  // relative to parent limb direction
};

/// Articulated stick-figure skeleton: a tree of limbs rooted at the pelvis.
struct Skeleton {
  int k = 0;
  std::vector<std::string> names;
  std::vector<SkeletonEdge> edges;
  int root = 0;

  int index_of(const std::string& name) const {
    for (int i = 0; i < k; ++i)
      if (names[i] == name) return i;
    throw std::invalid_argument("skeleton has no keypoint named " + name);
  }

  /// Every non-root keypoint must appear as exactly one child, parents must
  /// be defined before use (edges in topological order).
  void validate() const {
    if (k <= 0 || static_cast<int>(names.size()) != k)
      throw std::invalid_argument("skeleton: bad keypoint count");
    std::vector<int> child_count(k, 0), reached(k, 0);
    reached[root] = 1;
    for (const auto& e : edges) {
      if (e.parent < 0 || e.parent >= k || e.child < 0 || e.child >= k)
        throw std::invalid_argument("skeleton: edge index out of range");
      if (!reached[e.parent]) throw std::invalid_argument("skeleton: edges not in topological order");
      child_count[e.child]++;
      reached[e.child] = 1;
    }
    for (int i = 0; i < k; ++i) {
      if (i == root) {
        if (child_count[i] != 0) throw std::invalid_argument("skeleton: root appears as child");
      } else if (child_count[i] != 1) {
        throw std::invalid_argument("skeleton: keypoint " + names[i] + " must be exactly one child");
      }
    }
  }

  /// Default 11-keypoint humanoid.
  static Skeleton humanoid11() {
    Skeleton s;
    s.names = {"head",    "neck",    "pelvis",  "l_elbow", "r_elbow", "l_wrist",
               "r_wrist", "l_knee",  "r_knee",  "l_ankle", "r_ankle"};
    s.k = static_cast<int>(s.names.size());
    s.root = 2;  // pelvis
    auto id = [&](const char* n) { return s.index_of(n); };
    s.edges = {
        {id("pelvis"), id("neck"), 7, 10, -15, 15},
        {id("neck"), id("head"), 3, 5, -20, 20},
        {id("neck"), id("l_elbow"), 4, 7, 70, 150},
        {id("neck"), id("r_elbow"), 4, 7, -150, -70},
        {id("l_elbow"), id("l_wrist"), 4, 7, -80, 80},
        {id("r_elbow"), id("r_wrist"), 4, 7, -80, 80},
        {id("pelvis"), id("l_knee"), 6, 9, 135, 175},
        {id("pelvis"), id("r_knee"), 6, 9, -175, -135},
        {id("l_knee"), id("l_ankle"), 6, 9, -40, 40},
        {id("r_knee"), id("r_ankle"), 6, 9, -40, 40},
    };
    s.validate();
    return s;
  }
};

struct Sample {
  std::int64_t id = 0;
  Split split = Split::labeled;
  Image image;
  std::optional<Pose> pose;   // absent iff split == unlabeled
  double bbox_diag = 0.0;     // diagonal of the tight visible-keypoint bbox
};

struct DatasetMeta {
  int format_version = 1;
  int k = 11;
  int image_h = 64, image_w = 48;
  int heatmap_h = 16, heatmap_w = 12;
  std::uint64_t seed = 0;
  int n_labeled = 0, n_unlabeled = 0, n_test = 0;
  Skeleton skeleton;
  std::uint64_t index_checksum = 0;
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Sample> samples;
  std::vector<int> labeled_idx, unlabeled_idx, test_idx;

  const std::vector<int>& split_indices(Split s) const {
    switch (s) {
      case Split::labeled: return labeled_idx;
      case Split::unlabeled: return unlabeled_idx;
      case Split::test: return test_idx;
    }
    throw std::logic_error("bad split");
  }
};

/// Load failures carry a kind so callers/tests can distinguish them.
class LoadError : public std::runtime_error {
 public:
  enum class Kind { version_mismatch, checksum_mismatch, count_mismatch, missing_file, parse_error };

  LoadError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline double bbox_diagonal(const Pose& pose) {
  double x0 = 1e30, y0 = 1e30, x1 = -1e30, y1 = -1e30;
  int n = 0;
  for (const Keypoint& kp : pose.kps) {
    if (!kp.valid()) continue;
    x0 = std::min(x0, kp.x);
    y0 = std::min(y0, kp.y);
    x1 = std::max(x1, kp.x);
    y1 = std::max(y1, kp.y);
    ++n;
  }
  if (n < 2) return 0.0;
  return std::hypot(x1 - x0, y1 - y0);
}

/// Draws a random articulated pose: root uniform in the central 50% of the
/// canvas, global orientation uniform, each limb length/joint angle uniform
/// in its skeleton range. Keypoints landing outside the canvas get conf 0.
inline Pose sample_pose(Rng& rng, const Skeleton& skel, int canvas_h, int canvas_w) {
  Pose pose;
  pose.frame = Frame::canonical;
  pose.kps.resize(skel.k);
  std::vector<double> dir_deg(skel.k, 0.0);

  const double rx = rng.uniform(canvas_w * 0.25, canvas_w * 0.75);
  const double ry = rng.uniform(canvas_h * 0.25, canvas_h * 0.75);
  const double phi = rng.uniform(-180.0, 180.0);
  pose.kps[skel.root] = {rx, ry, 1.0};
  dir_deg[skel.root] = phi;

  for (const SkeletonEdge& e : skel.edges) {
    const double ang = dir_deg[e.parent] + rng.uniform(e.ang_min_deg, e.ang_max_deg);
    const double len = rng.uniform(e.len_min, e.len_max);
    const double rad = ang * std::numbers::pi / 180.0;
    pose.kps[e.child].x = pose.kps[e.parent].x + len * std::cos(rad);
    pose.kps[e.child].y = pose.kps[e.parent].y + len * std::sin(rad);
    pose.kps[e.child].conf = 1.0;
    dir_deg[e.child] = ang;
  }
  for (Keypoint& kp : pose.kps) {
    if (kp.x < 0.0 || kp.x > canvas_w - 1.0 || kp.y < 0.0 || kp.y > canvas_h - 1.0) kp.conf = 0.0;
  }
  return pose;
}

namespace detail {

inline void draw_soft_disc(Image& img, double cx, double cy, double radius, double intensity) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
  const int x1 = std::min(img.w - 1, static_cast<int>(std::ceil(cx + radius + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
  const int y1 = std::min(img.h - 1, static_cast<int>(std::ceil(cy + radius + 1)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      const double alpha = std::clamp(radius + 0.5 - d, 0.0, 1.0);
      if (alpha > 0.0) img.at(y, x) = static_cast<float>(img.at(y, x) * (1.0 - alpha) + intensity * alpha);
    }
  }
}

inline void draw_soft_segment(Image& img, double ax, double ay, double bx, double by, double width,
                              double intensity) {
  const double hw = width * 0.5;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - hw - 1)));
  const int x1 = std::min(img.w - 1, static_cast<int>(std::ceil(std::max(ax, bx) + hw + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - hw - 1)));
  const int y1 = std::min(img.h - 1, static_cast<int>(std::ceil(std::max(ay, by) + hw + 1)));
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      double t = len2 > 0.0 ? ((x - ax) * vx + (y - ay) * vy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double d = std::hypot(x - (ax + t * vx), y - (ay + t * vy));
      const double alpha = std::clamp(hw + 0.5 - d, 0.0, 1.0);
      if (alpha > 0.0) img.at(y, x) = static_cast<float>(img.at(y, x) * (1.0 - alpha) + intensity * alpha);
    }
  }
}

}  // namespace detail

/// Renders anti-aliased dark limb strokes (and a filled head disc) on a light
/// background, plus additive Gaussian pixel noise. Limbs with an invalid
/// endpoint are not drawn.
inline Image render_figure(const Pose& pose, const Skeleton& skel, int canvas_h, int canvas_w,
                           Rng& rng) {
  Image img(canvas_h, canvas_w, static_cast<float>(rng.uniform(0.8, 1.0)));
  for (const SkeletonEdge& e : skel.edges) {
    const Keypoint& a = pose.kps[e.parent];
    const Keypoint& b = pose.kps[e.child];
    if (!a.valid() || !b.valid()) continue;
    const double width = rng.uniform(2.0, 3.0);
    const double intensity = rng.uniform(0.0, 0.3);
    detail::draw_soft_segment(img, a.x, a.y, b.x, b.y, width, intensity);
  }
  const Keypoint& head = pose.kps[skel.index_of("head")];
  if (head.valid()) {
    const double radius = rng.uniform(2.0, 4.0);
    const double intensity = rng.uniform(0.0, 0.3);
    detail::draw_soft_disc(img, head.x, head.y, radius, intensity);
  }
  for (float& v : img.v) {
    v = static_cast<float>(std::clamp(v + rng.normal(0.0, 0.02), 0.0, 1.0));
  }
  return img;
}

// ---------------------------------------------------------------------------
// On-disk container: meta.json + index.json + oracle.json + images/*.pgm
// ---------------------------------------------------------------------------

inline void write_pgm(const std::filesystem::path& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  f << "P5\n" << img.w << " " << img.h << "\n255\n";
  std::vector<unsigned char> bytes(img.v.size());
  for (std::size_t i = 0; i < img.v.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(img.v[i], 0.f, 1.f) * 255.f));
  }
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("short write: " + path.string());
}

inline Image read_pgm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError(LoadError::Kind::missing_file, "missing image file: " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255)
    throw LoadError(LoadError::Kind::parse_error, "corrupt PGM header: " + path.string());
  f.get();  // single whitespace after maxval
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
  f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (f.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw LoadError(LoadError::Kind::parse_error, "truncated PGM payload: " + path.string());
  Image img(h, w);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.v[i] = bytes[i] / 255.f;
  return img;
}

struct GenerateConfig {
  int n_labeled = 100;
  int n_unlabeled = 1500;
  int n_test = 300;
  std::uint64_t seed = 1;
  int image_h = 64, image_w = 48;
};

namespace detail {

inline std::string image_rel_path(std::int64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "images/%06lld.pgm", static_cast<long long>(id));
  return buf;
}

inline nlohmann::json keypoints_json(const Pose& pose) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Keypoint& kp : pose.kps) arr.push_back({kp.x, kp.y, kp.conf});
  return arr;
}

inline Pose keypoints_from_json(const nlohmann::json& arr, Frame frame) {
  Pose pose;
  pose.frame = frame;
  for (const auto& item : arr) {
    pose.kps.push_back({item.at(0).get<double>(), item.at(1).get<double>(), item.at(2).get<double>()});
  }
  return pose;
}

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw LoadError(LoadError::Kind::missing_file, "missing file: " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for write: " + p.string());
  f << text;
  if (!f) throw std::runtime_error("short write: " + p.string());
}

}  // namespace detail

/// Generates one sample. The rng stream depends only on (seed, id), so
/// generation could be parallelised per sample without changing output.
inline Sample generate_sample(const GenerateConfig& cfg, const Skeleton& skel, std::int64_t id,
                              Split split) {
  Rng rng(cfg.seed, {0xDA7A5E7Dull, static_cast<std::uint64_t>(id)});
  Sample s;
  s.id = id;
  s.split = split;
  Pose pose = sample_pose(rng, skel, cfg.image_h, cfg.image_w);
  s.image = render_figure(pose, skel, cfg.image_h, cfg.image_w, rng);
  if (split != Split::unlabeled) {
    s.bbox_diag = bbox_diagonal(pose);
    s.pose = std::move(pose);
  }
  return s;
}

/// Writes the dataset container. Unlabeled ground truth goes only to
/// oracle.json, which the trainer never reads.
inline DatasetMeta generate_dataset(const GenerateConfig& cfg, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const Skeleton skel = Skeleton::humanoid11();
  fs::create_directories(out_dir / "images");

  DatasetMeta meta;
  meta.k = skel.k;
  meta.image_h = cfg.image_h;
  meta.image_w = cfg.image_w;
  meta.heatmap_h = cfg.image_h / 4;
  meta.heatmap_w = cfg.image_w / 4;
  meta.seed = cfg.seed;
  meta.n_labeled = cfg.n_labeled;
  meta.n_unlabeled = cfg.n_unlabeled;
  meta.n_test = cfg.n_test;
  meta.skeleton = skel;

  nlohmann::json index = nlohmann::json::array();
  nlohmann::json oracle = nlohmann::json::object();
  const std::int64_t total = cfg.n_labeled + cfg.n_unlabeled + cfg.n_test;
  for (std::int64_t id = 0; id < total; ++id) {
    Split split = id < cfg.n_labeled                  ? Split::labeled
                  : id < cfg.n_labeled + cfg.n_unlabeled ? Split::unlabeled
                                                         : Split::test;
    Rng rng(cfg.seed, {0xDA7A5E7Dull, static_cast<std::uint64_t>(id)});
    Pose pose = sample_pose(rng, skel, cfg.image_h, cfg.image_w);
    Image img = render_figure(pose, skel, cfg.image_h, cfg.image_w, rng);
    write_pgm(out_dir / detail::image_rel_path(id), img);

    nlohmann::json entry;
    entry["id"] = id;
    entry["split"] = split_name(split);
    entry["image"] = detail::image_rel_path(id);
    if (split == Split::unlabeled) {
      entry["keypoints"] = nullptr;
      oracle[std::to_string(id)] = detail::keypoints_json(pose);
    } else {
      entry["keypoints"] = detail::keypoints_json(pose);
    }
    index.push_back(entry);
  }

  const std::string index_text = index.dump(1) + "\n";
  detail::write_text_file(out_dir / "index.json", index_text);
  detail::write_text_file(out_dir / "oracle.json", oracle.dump(1) + "\n");
  meta.index_checksum = fnv1a(index_text.data(), index_text.size());

  nlohmann::json skel_json;
  skel_json["names"] = skel.names;
  skel_json["root"] = skel.root;
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : skel.edges) {
    edges.push_back({e.parent, e.child, e.len_min, e.len_max, e.ang_min_deg, e.ang_max_deg});
  }
  skel_json["edges"] = edges;

  nlohmann::json mj;
  mj["format_version"] = meta.format_version;
  mj["k"] = meta.k;
  mj["image_h"] = meta.image_h;
  mj["image_w"] = meta.image_w;
  mj["heatmap_h"] = meta.heatmap_h;
  mj["heatmap_w"] = meta.heatmap_w;
  mj["seed"] = meta.seed;
  mj["n_labeled"] = meta.n_labeled;
  mj["n_unlabeled"] = meta.n_unlabeled;
  mj["n_test"] = meta.n_test;
  mj["index_checksum"] = meta.index_checksum;
  mj["skeleton"] = skel_json;
  detail::write_text_file(out_dir / "meta.json", mj.dump(1) + "\n");
  return meta;
}

/// Loads and validates a dataset directory. Never touches oracle.json.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  nlohmann::json mj;
  try {
    mj = nlohmann::json::parse(detail::read_text_file(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadError::Kind::parse_error, "meta.json: " + std::string(e.what()));
  }

  Dataset ds;
  DatasetMeta& meta = ds.meta;
  if (mj.at("format_version").get<int>() != meta.format_version) {
    throw LoadError(LoadError::Kind::version_mismatch,
                    "dataset format version " + mj.at("format_version").dump() + " unsupported");
  }
  meta.k = mj.at("k").get<int>();
  meta.image_h = mj.at("image_h").get<int>();
  meta.image_w = mj.at("image_w").get<int>();
  meta.heatmap_h = mj.at("heatmap_h").get<int>();
  meta.heatmap_w = mj.at("heatmap_w").get<int>();
  meta.seed = mj.at("seed").get<std::uint64_t>();
  meta.n_labeled = mj.at("n_labeled").get<int>();
  meta.n_unlabeled = mj.at("n_unlabeled").get<int>();
  meta.n_test = mj.at("n_test").get<int>();
  meta.index_checksum = mj.at("index_checksum").get<std::uint64_t>();
  const auto& sj = mj.at("skeleton");
  meta.skeleton.names = sj.at("names").get<std::vector<std::string>>();
  meta.skeleton.k = static_cast<int>(meta.skeleton.names.size());
  meta.skeleton.root = sj.at("root").get<int>();
  for (const auto& e : sj.at("edges")) {
    meta.skeleton.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>(),
                                   e.at(3).get<double>(), e.at(4).get<double>(), e.at(5).get<double>()});
  }
  meta.skeleton.validate();

  const std::string index_text = detail::read_text_file(dir / "index.json");
  if (fnv1a(index_text.data(), index_text.size()) != meta.index_checksum) {
    throw LoadError(LoadError::Kind::checksum_mismatch, "index.json checksum mismatch");
  }
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(index_text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadError::Kind::parse_error, "index.json: " + std::string(e.what()));
  }

  int counts[3] = {0, 0, 0};
  for (const auto& entry : index) {
    Sample s;
    s.id = entry.at("id").get<std::int64_t>();
    s.split = split_from_name(entry.at("split").get<std::string>());
    s.image = read_pgm(dir / entry.at("image").get<std::string>());
    if (s.image.h != meta.image_h || s.image.w != meta.image_w) {
      throw LoadError(LoadError::Kind::parse_error,
                      "image dims mismatch for id " + std::to_string(s.id));
    }
    if (!entry.at("keypoints").is_null()) {
      Pose pose = detail::keypoints_from_json(entry.at("keypoints"), Frame::canonical);
      if (static_cast<int>(pose.kps.size()) != meta.k)
        throw LoadError(LoadError::Kind::parse_error, "keypoint count mismatch for id " + std::to_string(s.id));
      for (const Keypoint& kp : pose.kps) {
        if (kp.valid() && (kp.x < 0 || kp.x > meta.image_w - 1.0 || kp.y < 0 || kp.y > meta.image_h - 1.0))
          throw LoadError(LoadError::Kind::parse_error,
                          "visible keypoint outside image for id " + std::to_string(s.id));
      }
      s.bbox_diag = bbox_diagonal(pose);
      s.pose = std::move(pose);
    } else if (s.split != Split::unlabeled) {
      throw LoadError(LoadError::Kind::parse_error,
                      "missing keypoints for non-unlabeled id " + std::to_string(s.id));
    }
    counts[static_cast<int>(s.split)]++;
    ds.samples.push_back(std::move(s));
  }
  if (counts[0] != meta.n_labeled || counts[1] != meta.n_unlabeled || counts[2] != meta.n_test) {
    throw LoadError(LoadError::Kind::count_mismatch, "index split counts do not match meta.json");
  }
  for (int i = 0; i < static_cast<int>(ds.samples.size()); ++i) {
    switch (ds.samples[i].split) {
      case Split::labeled: ds.labeled_idx.push_back(i); break;
      case Split::unlabeled: ds.unlabeled_idx.push_back(i); break;
      case Split::test: ds.test_idx.push_back(i); break;
    }
  }
  return ds;
}

/// Hidden ground truth for the unlabeled split; read only by analysis code.
inline std::map<std::int64_t, Pose> load_oracle(const std::filesystem::path& dir) {
  nlohmann::json oj;
  try {
    oj = nlohmann::json::parse(detail::read_text_file(dir / "oracle.json"));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadError::Kind::parse_error, "oracle.json: " + std::string(e.what()));
  }
  std::map<std::int64_t, Pose> oracle;
  for (auto it = oj.begin(); it != oj.end(); ++it) {
    oracle[std::stoll(it.key())] = detail::keypoints_from_json(it.value(), Frame::canonical);
  }
  return oracle;
}

}  // namespace sspcm
