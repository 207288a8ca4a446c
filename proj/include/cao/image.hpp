#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cao/error.hpp"

namespace cao {

// Dense 8-bit grid shared by grayscale images, label masks (codes 0..3),
// and binary masks (0/1).
struct ByteImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // row-major, data[y * width + x]

  ByteImage() = default;
  ByteImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

  bool operator==(const ByteImage&) const = default;
};

using GrayImage = ByteImage;
using MaskImage = ByteImage;   // pixel values: 0 background, 1 trachea, 2 tumor, 3 fiducial
using BinaryMask = ByteImage;  // pixel values: 0 / 1

// Mask label codes as stored in PGM files.
inline constexpr std::uint8_t kMaskBackground = 0;
inline constexpr std::uint8_t kMaskTrachea = 1;
inline constexpr std::uint8_t kMaskTumor = 2;
inline constexpr std::uint8_t kMaskFiducial = 3;

// ---------------------------------------------------------------------------
// PGM (P5) I/O
// ---------------------------------------------------------------------------

inline void write_pgm(const ByteImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

inline ByteImage read_pgm(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::MissingFile, "missing file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

  auto next_token = [&in, &path]() {
    std::string tok;
    while (true) {
      int c = in.get();
      if (c == EOF)
        throw Error(ErrorCode::MalformedLine, path.string() + ": truncated PGM header");
      if (c == '#') {  // comment to end of line
        while (c != EOF && c != '\n') c = in.get();
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
  };

  if (next_token() != "P5")
    throw Error(ErrorCode::MalformedLine, path.string() + ": not a P5 PGM");
  ByteImage img;
  img.width = std::stoi(next_token());
  img.height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (img.width <= 0 || img.height <= 0 || maxval != 255)
    throw Error(ErrorCode::MalformedLine, path.string() + ": unsupported PGM geometry");
  img.data.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
    throw Error(ErrorCode::MalformedLine, path.string() + ": truncated pixel data");
  return img;
}

// ---------------------------------------------------------------------------
// Manifest: one "<image_name> <path>" pair per line, '#' comments.
// Relative paths resolve against the manifest's directory.
// ---------------------------------------------------------------------------

inline std::map<std::string, std::filesystem::path> read_manifest(
    const std::filesystem::path& manifest_path) {
  if (!std::filesystem::exists(manifest_path))
    throw Error(ErrorCode::MissingFile, "missing file: " + manifest_path.string());
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + manifest_path.string());
  const auto base = manifest_path.parent_path();
  std::map<std::string, std::filesystem::path> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto sep = line.find(' ');
    if (sep == std::string::npos || sep == 0 || sep + 1 >= line.size())
      throw Error(ErrorCode::MalformedLine,
                  manifest_path.string() + ":" + std::to_string(line_no) +
                      ": expected '<image_name> <path>'");
    std::filesystem::path p(line.substr(sep + 1));
    if (p.is_relative()) p = base / p;
    out[line.substr(0, sep)] = p;
  }
  return out;
}

inline void write_manifest(const std::map<std::string, std::filesystem::path>& entries,
                           const std::filesystem::path& manifest_path) {
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + manifest_path.string());
  out << "# image_name mask_path\n";
  for (const auto& [name, path] : entries) out << name << " " << path.string() << "\n";
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + manifest_path.string());
}

}  // namespace cao
