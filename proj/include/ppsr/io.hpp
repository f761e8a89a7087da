#pragma once

// Volume serialization.
//
//  * P5 PGM, maxval 255: one file per frame. Samples are rounded half away
//    from zero and clamped to [0, 255] on export.
//  * PSRV1 float dump: lossless. Layout is the 5-byte magic "PSRV1", then
//    height, width, frames as little-endian uint32, then height*width*frames
//    little-endian IEEE-754 doubles in canonical vectorization order
//    (column-major within a frame, frames in temporal order).

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ppsr/errors.hpp"
#include "ppsr/volume.hpp"

namespace ppsr::io {

namespace fs = std::filesystem;

inline constexpr std::array<char, 5> kFloatDumpMagic = {'P', 'S', 'R', 'V', '1'};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_f64(std::ostream& os, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

inline std::uint64_t get_le(std::istream& is, int bytes, const std::string& path) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw IoError(path + ": truncated float dump");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

// Skips whitespace and '#' comments in a PNM header.
inline void skip_pnm_space(std::istream& is) {
  while (true) {
    int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_pnm_int(std::istream& is, const std::string& path) {
  skip_pnm_space(is);
  long long v = -1;
  if (!(is >> v) || v <= 0) throw IoError(path + ": malformed PGM header");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Round half away from zero, then clamp to [0, 255].
inline std::uint8_t to_byte(double x) {
  const double r = std::round(x);  // std::round rounds halfway cases away from zero
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

inline void write_pgm(const fs::path& path, const ImageVolume& v, std::size_t frame = 0) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "P5\n" << v.width() << " " << v.height() << "\n255\n";
  for (std::size_t r = 0; r < v.height(); ++r) {
    for (std::size_t c = 0; c < v.width(); ++c) os.put(static_cast<char>(to_byte(v(r, c, frame))));
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline ImageVolume read_pgm(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string magic(2, '\0');
  is.read(magic.data(), 2);
  if (magic != "P5") throw IoError(path.string() + ": not a binary PGM (P5)");
  const auto width = detail::read_pnm_int(is, path.string());
  const auto height = detail::read_pnm_int(is, path.string());
  const auto maxval = detail::read_pnm_int(is, path.string());
  if (maxval > 255) throw IoError(path.string() + ": only 8-bit PGM is supported");
  is.get();  // single whitespace after maxval
  std::vector<unsigned char> raw(width * height);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (is.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw IoError(path.string() + ": truncated PGM data");
  }
  ImageVolume v(height, width);
  const double scale = 255.0 / static_cast<double>(maxval);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) v(r, c) = raw[r * width + c] * scale;
  }
  return v;
}

inline void write_float_dump(const fs::path& path, const ImageVolume& v) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kFloatDumpMagic.data(), kFloatDumpMagic.size());
  detail::put_u32(os, static_cast<std::uint32_t>(v.height()));
  detail::put_u32(os, static_cast<std::uint32_t>(v.width()));
  detail::put_u32(os, static_cast<std::uint32_t>(v.frames()));
  for (double x : v.samples()) detail::put_f64(os, x);
  if (!os) throw IoError("write failed: " + path.string());
}

inline ImageVolume read_float_dump(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::array<char, 5> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kFloatDumpMagic) throw IoError(path.string() + ": bad PSRV1 magic");
  const auto p = path.string();
  Shape shape;
  shape.height = detail::get_le(is, 4, p);
  shape.width = detail::get_le(is, 4, p);
  shape.frames = detail::get_le(is, 4, p);
  if (shape.size() == 0) throw IoError(p + ": zero-sized volume");
  std::vector<double> data(shape.size());
  for (double& x : data) x = std::bit_cast<double>(detail::get_le(is, 8, p));
  return ImageVolume(shape, std::move(data));
}

/// Sorted list of *.pgm files in a directory.
inline std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Loads a .psrv dump, a single .pgm, or a directory of .pgm frames (sorted by name).
inline ImageVolume load_volume(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file or directory: " + path.string());
  if (fs::is_directory(path)) {
    const auto files = list_frames(path);
    if (files.empty()) throw IoError(path.string() + ": no .pgm frames found");
    const ImageVolume first = read_pgm(files.front());
    ImageVolume out(first.height(), first.width(), files.size());
    out.set_frame(0, first);
    for (std::size_t t = 1; t < files.size(); ++t) {
      const ImageVolume f = read_pgm(files[t]);
      if (f.height() != first.height() || f.width() != first.width()) {
        throw IoError(files[t].string() + ": frame size differs from " + files.front().string());
      }
      out.set_frame(t, f);
    }
    return out;
  }
  if (path.extension() == ".pgm") return read_pgm(path);
  return read_float_dump(path);
}

inline std::string frame_name(std::size_t t) {
  std::ostringstream os;
  os << "frame_";
  os.width(4);
  os.fill('0');
  os << t << ".pgm";
  return os.str();
}

/// Writes every frame as dir/frame_NNNN.pgm.
inline void save_frames(const fs::path& dir, const ImageVolume& v) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < v.frames(); ++t) write_pgm(dir / frame_name(t), v, t);
}

}  // namespace ppsr::io
