#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "classroom/emotion/cnn.hpp"
#include "classroom/error.hpp"

namespace classroom {

/// Text checkpoint container.
///
///   classroom-emotion-checkpoint <version>
///   architecture <descriptor>
///   input <channels> <height> <width>
///   classes boredom=0,confusion=1,engagement=2,frustration=3
///   seed <n>
///   tensor <name> <rank> <dims...>
///   <values, whitespace separated, shortest round-trip decimal>
///   ...
///   end
///
/// Only version 1 is understood; anything else fails with UnknownCheckpointVersion.
inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointMagic = "classroom-emotion-checkpoint";

inline std::string class_table() {
  std::string out;
  for (EmotionClass e : kAllEmotions) {
    if (!out.empty()) out += ',';
    out += std::string(label_of(e)) + "=" + std::to_string(code_of(e));
  }
  return out;
}

inline void write_checkpoint(std::ostream& out, const ReferenceCnn<float>& model) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "architecture " << ReferenceCnn<float>::architecture() << '\n';
  out << "input " << model.shape().channels << ' ' << model.shape().height << ' ' << model.shape().width
      << '\n';
  out << "classes " << class_table() << '\n';
  out << "seed " << model.seed() << '\n';
  const auto params = model.parameters();
  char buf[64];
  for (const auto& slot : model.slots()) {
    out << "tensor " << slot.name << ' ' << slot.dims.size();
    for (auto d : slot.dims) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < slot.size; ++i) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), params[slot.offset + i]);
      out.write(buf, ptr - buf);
      out << ((i + 1) % 16 == 0 || i + 1 == slot.size ? '\n' : ' ');
    }
  }
  out << "end\n";
}

inline ReferenceCnn<float> read_checkpoint(std::istream& in) {
  const auto fail = [](const std::string& what) -> Error {
    return Error(ErrorCode::MalformedPayload, "checkpoint: " + what);
  };
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) throw fail("missing header");
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::UnknownCheckpointVersion, "checkpoint version " + std::to_string(version));
  }
  std::string key, value;
  if (!(in >> key >> value) || key != "architecture") throw fail("missing architecture");
  if (value != ReferenceCnn<float>::architecture()) throw fail("unsupported architecture " + value);
  CnnShape shape;
  if (!(in >> key >> shape.channels >> shape.height >> shape.width) || key != "input") throw fail("missing input");
  if (!(in >> key >> value) || key != "classes") throw fail("missing class table");
  if (value != class_table()) throw fail("class table mismatch: " + value);
  std::uint64_t seed = 0;
  if (!(in >> key >> seed) || key != "seed") throw fail("missing seed");

  ReferenceCnn<float> model(shape, seed);
  auto params = model.parameters();
  for (const auto& slot : model.slots()) {
    std::string name;
    std::size_t rank = 0;
    if (!(in >> key >> name >> rank) || key != "tensor" || name != slot.name || rank != slot.dims.size()) {
      throw fail("expected tensor " + slot.name);
    }
    for (auto expected : slot.dims) {
      std::size_t d = 0;
      if (!(in >> d) || d != expected) throw fail("dimension mismatch in " + slot.name);
    }
    for (std::size_t i = 0; i < slot.size; ++i) {
      std::string token;
      if (!(in >> token)) throw fail("truncated tensor " + slot.name);
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc{} || ptr != token.data() + token.size()) throw fail("bad value '" + token + "'");
      params[slot.offset + i] = v;
    }
  }
  if (!(in >> key) || key != "end") throw fail("missing end marker");
  return model;
}

inline void save_checkpoint(const std::string& path, const ReferenceCnn<float>& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IOFailure, "cannot write " + path);
  write_checkpoint(out, model);
  if (!out) throw Error(ErrorCode::IOFailure, "write failed: " + path);
}

inline ReferenceCnn<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot read " + path);
  return read_checkpoint(in);
}

}  // namespace classroom
