#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "classroom/dataset/image_io.hpp"
#include "classroom/emotion/emotion_class.hpp"
#include "classroom/emotion/image.hpp"
#include "classroom/emotion/trainer.hpp"
#include "classroom/error.hpp"
#include "classroom/identity/enrollment_file.hpp"

namespace classroom::dataset {

namespace fs = std::filesystem;

/// Annotation column order, which is also the tie-break order.
inline constexpr std::array<EmotionClass, kNumEmotions> kAnnotationOrder{
    EmotionClass::Boredom, EmotionClass::Engagement, EmotionClass::Confusion, EmotionClass::Frustration};

struct ClipAnnotation {
  std::string clip_id;
  /// Scores in annotation column order: Boredom, Engagement, Confusion, Frustration.
  std::array<int, kNumEmotions> scores{};

  int score(EmotionClass e) const {
    for (std::size_t i = 0; i < kNumEmotions; ++i) {
      if (kAnnotationOrder[i] == e) return scores[i];
    }
    return 0;
  }
};

struct LabeledClip {
  std::string clip_id;
  EmotionClass emotion = EmotionClass::Boredom;
};

inline EmotionClass select_primary_emotion(const ClipAnnotation& a) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    if (a.scores[i] < 0 || a.scores[i] > 3) {
      throw Error(ErrorCode::InvalidArgument, a.clip_id + ": score outside 0-3");
    }
    if (a.scores[i] > a.scores[best]) best = i;
  }
  if (a.scores[best] == 0) throw Error(ErrorCode::AllZeroScores, a.clip_id);
  return kAnnotationOrder[best];
}

/// Parses the annotation table. Columns are located by header name so extra
/// columns (such as a precomputed label) are ignored.
inline std::vector<ClipAnnotation> read_annotations(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedPayload, "annotation table is empty");
  const auto header = classroom::detail::split_commas(line);
  std::optional<std::size_t> id_col;
  std::array<std::optional<std::size_t>, kNumEmotions> score_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name{classroom::detail::trim(header[i])};
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (name == "clipid") id_col = i;
    for (std::size_t k = 0; k < kNumEmotions; ++k) {
      if (name == label_of(kAnnotationOrder[k])) score_col[k] = i;
    }
  }
  if (!id_col) throw Error(ErrorCode::MalformedPayload, "annotation header lacks ClipID");
  for (const auto& c : score_col) {
    if (!c) throw Error(ErrorCode::MalformedPayload, "annotation header lacks an emotion column");
  }
  std::vector<ClipAnnotation> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (classroom::detail::trim(line).empty()) continue;
    const auto cells = classroom::detail::split_commas(line);
    const auto cell = [&](std::size_t col) -> std::string {
      if (col >= cells.size()) {
        throw Error(ErrorCode::MalformedPayload, "line " + std::to_string(line_no) + ": missing column");
      }
      return std::string(classroom::detail::trim(cells[col]));
    };
    ClipAnnotation a;
    a.clip_id = cell(*id_col);
    for (std::size_t k = 0; k < kNumEmotions; ++k) {
      const std::string text = cell(*score_col[k]);
      int v = 0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || ptr != text.data() + text.size() || v < 0 || v > 3) {
        throw Error(ErrorCode::MalformedPayload,
                    "line " + std::to_string(line_no) + ": score '" + text + "' is not an integer in 0-3");
      }
      a.scores[k] = v;
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<ClipAnnotation> read_annotations_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open " + path.string());
  return read_annotations(in);
}

/// Labels every clip, dropping all-zero rows.
inline std::vector<LabeledClip> label_clips(const std::vector<ClipAnnotation>& annotations) {
  std::vector<LabeledClip> out;
  for (const auto& a : annotations) {
    try {
      out.push_back(LabeledClip{a.clip_id, select_primary_emotion(a)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllZeroScores) throw;
    }
  }
  return out;
}

/// Per-class clip target; nullopt means take everything available.
using ClassTargets = std::array<std::optional<std::size_t>, kNumEmotions>;

/// 40 boredom, 40 confusion, 40 engagement, all frustration.
inline ClassTargets default_targets() { return ClassTargets{40, 40, 40, std::nullopt}; }

/// Result is ordered by clip_id and independent of the input order.
inline std::vector<LabeledClip> balanced_sample(std::vector<LabeledClip> clips, const ClassTargets& targets,
                                                std::uint64_t seed) {
  std::sort(clips.begin(), clips.end(), [](const auto& a, const auto& b) { return a.clip_id < b.clip_id; });
  std::vector<LabeledClip> out;
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    std::vector<LabeledClip> pool;
    for (const auto& clip : clips) {
      if (static_cast<std::size_t>(code_of(clip.emotion)) == c) pool.push_back(clip);
    }
    std::size_t take = pool.size();
    if (targets[c]) {
      if (*targets[c] > pool.size()) {
        throw Error(ErrorCode::InsufficientClips, std::string(label_of(static_cast<EmotionClass>(c))) + ": wanted " +
                                                      std::to_string(*targets[c]) + ", have " +
                                                      std::to_string(pool.size()));
      }
      take = *targets[c];
      std::mt19937_64 rng(seed * 0x100000001b3ULL + c);
      // partial Fisher-Yates: the first `take` slots are a uniform sample
      for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
    }
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.clip_id < b.clip_id; });
  return out;
}

inline std::array<std::size_t, kNumEmotions> class_counts(const std::vector<LabeledClip>& clips) {
  std::array<std::size_t, kNumEmotions> counts{};
  for (const auto& c : clips) ++counts[static_cast<std::size_t>(code_of(c.emotion))];
  return counts;
}

/// floor(i*N/k) for i in [0,k), duplicates removed, then the last index
/// repeated until there are k entries.
inline std::vector<std::size_t> select_frame_indices(std::size_t frame_count, std::size_t k = 10) {
  if (frame_count == 0) throw Error(ErrorCode::EmptyClip, "clip has no frames");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t v = i * frame_count / k;
    if (idx.empty() || idx.back() != v) idx.push_back(v);
  }
  while (idx.size() < k) idx.push_back(idx.back());
  return idx;
}

/// Image files in `dir`, sorted by file name.
inline std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> frames;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && io::is_image_file(entry.path())) frames.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::IOFailure, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(frames.begin(), frames.end());
  return frames;
}

inline std::vector<fs::path> select_frames(const fs::path& clip_dir, std::size_t k = 10) {
  const auto frames = list_frames(clip_dir);
  if (frames.empty()) throw Error(ErrorCode::EmptyClip, clip_dir.string());
  std::vector<fs::path> out;
  for (std::size_t i : select_frame_indices(frames.size(), k)) out.push_back(frames[i]);
  return out;
}

/// Seeded per-class split; each class sends round(test_fraction * n) items to test.
inline std::vector<SplitTag> stratified_split(const std::vector<int>& codes, double test_fraction,
                                              std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "test_fraction must be in [0,1]");
  }
  std::vector<SplitTag> tags(codes.size(), SplitTag::Train);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < codes.size(); ++i) by_class[codes[i]].push_back(i);
  for (auto& [code, members] : by_class) {
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(code + 1)));
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(members.size()) + 0.5));
    for (std::size_t i = 0; i < n_test && i < members.size(); ++i) tags[members[i]] = SplitTag::Test;
  }
  return tags;
}

struct ManifestEntry {
  /// Relative to the manifest's directory.
  std::string path;
  int code = 0;
  SplitTag split = SplitTag::Train;
};

struct PreparedManifest {
  std::vector<ManifestEntry> entries;
  std::array<std::size_t, kNumEmotions> clip_counts{};
  std::uint64_t seed = 0;

  std::size_t count(SplitTag split) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [&](const auto& e) { return e.split == split; }));
  }
  std::size_t count(int code, SplitTag split) const {
    return static_cast<std::size_t>(std::count_if(
        entries.begin(), entries.end(), [&](const auto& e) { return e.code == code && e.split == split; }));
  }
};

struct ManifestOptions {
  std::size_t frames_per_clip = 10;
  double test_fraction = 0.2;
  /// Split whole clips instead of individual frames.
  bool clip_level_split = false;
  /// 0 = hardware concurrency.
  unsigned workers = 0;
};

inline std::string_view split_name(SplitTag s) { return s == SplitTag::Train ? "train" : "test"; }

inline SplitTag parse_split(std::string_view s) {
  if (s == "train") return SplitTag::Train;
  if (s == "test") return SplitTag::Test;
  throw Error(ErrorCode::MalformedPayload, "unknown split '" + std::string(s) + "'");
}

namespace detail {

inline fs::path clip_directory(const fs::path& frames_root, const std::string& clip_id) {
  const fs::path direct = frames_root / clip_id;
  if (fs::is_directory(direct)) return direct;
  const fs::path stem = frames_root / fs::path(clip_id).stem();
  if (fs::is_directory(stem)) return stem;
  throw Error(ErrorCode::IOFailure, "no frame directory for clip " + clip_id + " under " + frames_root.string());
}

inline RawImage quantize(const ImageTensor& t) {
  RawImage img{t.height, t.width, 1, std::vector<std::uint8_t>(t.height * t.width)};
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(t.values[i], 0.0f, 1.0f) * 255.0f));
  }
  return img;
}

}  // namespace detail

/// Selects, preprocesses (grayscale, 64x64) and writes each clip's frames to
/// `output_dir/<clip stem>/frame_XX.pgm`, then assigns the seeded stratified
/// split. Entries are ordered by clip_id, then frame position.
inline PreparedManifest build_manifest(const std::vector<LabeledClip>& clips, const fs::path& frames_root,
                                       const fs::path& output_dir, std::uint64_t seed,
                                       const ManifestOptions& options = {}) {
  std::vector<LabeledClip> ordered = clips;
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.clip_id < b.clip_id; });
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) throw Error(ErrorCode::IOFailure, "cannot create " + output_dir.string() + ": " + ec.message());

  std::vector<std::vector<std::string>> written(ordered.size());
  std::vector<std::string> failures(ordered.size());
  const auto process = [&](std::size_t i) {
    try {
      const auto& clip = ordered[i];
      const auto frames = select_frames(detail::clip_directory(frames_root, clip.clip_id), options.frames_per_clip);
      const fs::path rel_dir = fs::path(clip.clip_id).stem();
      fs::create_directories(output_dir / rel_dir);
      for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto tensor = preprocess_face(io::to_grayscale(io::read_image(frames[f])), frames[f].string());
        char name[32];
        std::snprintf(name, sizeof name, "frame_%02zu.pgm", f);
        io::write_pgm(output_dir / rel_dir / name, detail::quantize(tensor));
        written[i].push_back((rel_dir / name).generic_string());
      }
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  };

  const unsigned workers = std::max(1u, options.workers != 0 ? options.workers : std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < std::min<std::size_t>(workers, ordered.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < ordered.size(); i = next++) process(i);
    });
  }
  for (std::size_t i = next++; i < ordered.size(); i = next++) process(i);
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (!failures[i].empty()) throw Error(ErrorCode::IOFailure, ordered[i].clip_id + ": " + failures[i]);
  }

  PreparedManifest m;
  m.seed = seed;
  m.clip_counts = class_counts(ordered);
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    for (const auto& path : written[i]) m.entries.push_back(ManifestEntry{path, code_of(ordered[i].emotion), {}});
  }
  if (options.clip_level_split) {
    std::vector<int> clip_codes;
    for (const auto& c : ordered) clip_codes.push_back(code_of(c.emotion));
    const auto tags = stratified_split(clip_codes, options.test_fraction, seed);
    std::size_t e = 0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      for (std::size_t f = 0; f < written[i].size(); ++f) m.entries[e++].split = tags[i];
    }
  } else {
    std::vector<int> codes;
    for (const auto& e : m.entries) codes.push_back(e.code);
    const auto tags = stratified_split(codes, options.test_fraction, seed);
    for (std::size_t i = 0; i < m.entries.size(); ++i) m.entries[i].split = tags[i];
  }
  return m;
}

inline void write_manifest(std::ostream& out, const PreparedManifest& m) {
  out << "path,code,split\n";
  for (const auto& e : m.entries) out << e.path << ',' << e.code << ',' << split_name(e.split) << '\n';
}

inline void save_manifest(const fs::path& path, const PreparedManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IOFailure, "cannot write " + path.string());
  write_manifest(out, m);
  if (!out) throw Error(ErrorCode::IOFailure, "write failed: " + path.string());
}

inline std::vector<ManifestEntry> read_manifest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || classroom::detail::trim(line) != "path,code,split") {
    throw Error(ErrorCode::MalformedPayload, "manifest header must be 'path,code,split'");
  }
  std::vector<ManifestEntry> out;
  while (std::getline(in, line)) {
    if (classroom::detail::trim(line).empty()) continue;
    const auto cells = classroom::detail::split_commas(line);
    if (cells.size() != 3) throw Error(ErrorCode::MalformedPayload, "manifest row needs 3 fields: " + line);
    ManifestEntry e;
    e.path = std::string(classroom::detail::trim(cells[0]));
    const auto code_text = classroom::detail::trim(cells[1]);
    int code = -1;
    const auto [ptr, ec] = std::from_chars(code_text.data(), code_text.data() + code_text.size(), code);
    if (ec != std::errc{} || ptr != code_text.data() + code_text.size()) {
      throw Error(ErrorCode::MalformedPayload, "bad class code in manifest row: " + line);
    }
    e.code = code_of(emotion_from_code(code));
    e.split = parse_split(classroom::detail::trim(cells[2]));
    out.push_back(std::move(e));
  }
  return out;
}

/// Loads the frames of one split, resolving paths against `base_dir`.
inline LabeledDataset load_manifest_split(const fs::path& manifest_path, SplitTag split) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open " + manifest_path.string());
  const fs::path base = manifest_path.parent_path();
  LabeledDataset ds;
  ds.split = split;
  for (const auto& e : read_manifest(in)) {
    if (e.split != split) continue;
    const fs::path p = fs::path(e.path).is_absolute() ? fs::path(e.path) : base / e.path;
    ds.items.push_back(LabeledImage{preprocess_face(io::to_grayscale(io::read_image(p)), e.path), e.code});
  }
  return ds;
}

}  // namespace classroom::dataset
