// src/feature_store.cc

// Copyright 2026  The USCF Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "uscf/feature_store.h"

#include <unistd.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "uscf/error.h"

namespace uscf {

namespace {

constexpr char kMagic[4] = {'U', 'S', 'C', 'F'};

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(static_cast<unsigned char>(in[offset + i]))
             << (8 * i);
  return value;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool has_space(const std::string& s) {
  return s.find_first_of(" \t\r\n") != std::string::npos;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::string text = read_file(path);
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(strip_cr(line));
  return lines;
}

std::string where(const fs::path& path, std::size_t line_no) {
  return path.string() + ": line " + std::to_string(line_no);
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": missing file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError(path.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError(path.string() + ": rename failed: " + ec.message());
  }
}

std::string encode_fmat(const Matrix& m, std::uint32_t frame_rate) {
  require_finite(m, "write_fmat");
  std::string out;
  out.reserve(kFmatHeaderBytes + 4 * static_cast<std::size_t>(m.size()));
  out.append(kMagic, 4);
  out.push_back(static_cast<char>(kFmatVersion));
  out.push_back(static_cast<char>(kFmatDtypeFloat32));
  put_le<std::uint16_t>(out, 0);
  put_le<std::uint32_t>(out, frame_rate);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const float f = static_cast<float>(m(i, j));
      if (!std::isfinite(f))
        throw DataError("write_fmat: entry overflows float32");
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

Matrix decode_fmat(const std::string& bytes, const std::string& origin,
                   std::uint32_t* frame_rate) {
  if (bytes.size() < kFmatHeaderBytes)
    throw DataError(origin + ": truncated header");
  if (bytes.compare(0, 4, kMagic, 4) != 0)
    throw DataError(origin + ": bad magic");
  if (static_cast<std::uint8_t>(bytes[4]) != kFmatVersion)
    throw DataError(origin + ": unsupported version");
  if (static_cast<std::uint8_t>(bytes[5]) != kFmatDtypeFloat32)
    throw DataError(origin + ": unsupported dtype");
  const auto rate = get_le<std::uint32_t>(bytes, 8);
  const auto rows = get_le<std::uint64_t>(bytes, 12);
  const auto cols = get_le<std::uint64_t>(bytes, 20);

  constexpr auto kMaxIndex =
      static_cast<std::uint64_t>(std::numeric_limits<Index>::max());
  std::uint64_t count = 0, payload = 0;
  if (rows > kMaxIndex || cols > kMaxIndex ||
      __builtin_mul_overflow(rows, cols, &count) ||
      __builtin_mul_overflow(count, std::uint64_t{4}, &payload) ||
      payload > kMaxIndex) {
    throw DataError(origin + ": dimension overflow");
  }
  const std::uint64_t actual = bytes.size() - kFmatHeaderBytes;
  if (actual < payload) throw DataError(origin + ": truncated payload");
  if (actual > payload)
    throw DataError(origin + ": payload size mismatch (trailing bytes)");

  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::size_t at = kFmatHeaderBytes;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j, at += 4) {
      const float f = std::bit_cast<float>(get_le<std::uint32_t>(bytes, at));
      if (!std::isfinite(f)) throw DataError(origin + ": non-finite value");
      m(i, j) = f;
    }
  }
  if (frame_rate) *frame_rate = rate;
  return m;
}

FeatureFile read_feature_file(const fs::path& path) {
  FeatureFile file;
  file.path = path;
  file.matrix = decode_fmat(read_file(path), path.string(), &file.frame_rate);
  return file;
}

Matrix read_fmat(const fs::path& path) {
  return decode_fmat(read_file(path), path.string());
}

void write_fmat(const fs::path& path, const Matrix& m,
                std::uint32_t frame_rate) {
  write_file_atomic(path, encode_fmat(m, frame_rate));
}

Matrix round_to_float(const Matrix& m) {
  return m.unaryExpr([](double v) { return double(static_cast<float>(v)); });
}

Index frames_for_seconds(double seconds, std::uint32_t frame_rate) {
  return static_cast<Index>(std::llround(seconds * frame_rate));
}

double seconds_for_frames(Index frames, std::uint32_t frame_rate) {
  if (frame_rate == 0) throw DataError("frame rate is unspecified");
  return static_cast<double>(frames) / frame_rate;
}

std::vector<std::string> Manifest::speakers() const {
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const auto& e : entries)
    if (seen.insert(e.speaker_id).second) order.push_back(e.speaker_id);
  return order;
}

std::vector<fs::path> Manifest::files_for(const std::string& speaker_id) const {
  std::vector<fs::path> files;
  for (const auto& e : entries)
    if (e.speaker_id == speaker_id) files.push_back(e.path);
  return files;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

Manifest load_manifest(const fs::path& path) {
  const auto lines = read_lines(path);
  const fs::path base = path.parent_path();
  Manifest manifest;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty() ||
        has_space(fields[0])) {
      throw DataError(where(path, i + 1) + ": malformed manifest entry");
    }
    fs::path file = fields[1];
    if (file.is_relative()) file = base / file;
    if (!fs::exists(file))
      throw DataError(where(path, i + 1) + ": missing file " + file.string());
    manifest.entries.push_back({fields[0], file});
  }
  if (manifest.entries.empty())
    throw DataError(path.string() + ": empty manifest");
  return manifest;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  std::string text;
  for (const auto& e : manifest.entries)
    text += e.speaker_id + "\t" + e.path.generic_string() + "\n";
  write_file_atomic(path, text);
}

LabelTrack load_labels(const fs::path& path) {
  const auto lines = read_lines(path);
  LabelTrack track;
  std::set<std::string> declared;
  bool have_inventory = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto fields = split_tabs(line);
      if (fields[0] == "#inventory") {
        have_inventory = true;
        for (std::size_t f = 1; f < fields.size(); ++f) {
          if (fields[f].empty())
            throw DataError(where(path, i + 1) + ": empty inventory entry");
          if (declared.insert(fields[f]).second)
            track.inventory.push_back(fields[f]);
        }
      }
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[1].empty() || fields[2].empty())
      throw DataError(where(path, i + 1) + ": malformed label line");
    Index frame = 0;
    const auto& idx = fields[0];
    auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), frame);
    if (ec != std::errc() || ptr != idx.data() + idx.size() || frame < 0)
      throw DataError(where(path, i + 1) + ": malformed frame index");
    if (!track.records.empty()) {
      const Index prev = track.records.back().frame_index;
      if (frame == prev)
        throw DataError(where(path, i + 1) + ": duplicate frame_index " + idx);
      if (frame < prev)
        throw DataError(where(path, i + 1) + ": frame_index not increasing");
    }
    if (have_inventory && !declared.count(fields[2]))
      throw DataError(where(path, i + 1) + ": phoneme '" + fields[2] +
                      "' not in inventory");
    track.records.push_back({frame, fields[1], fields[2]});
  }
  if (!have_inventory) {
    std::set<std::string> seen;
    for (const auto& r : track.records) seen.insert(r.phoneme);
    track.inventory.assign(seen.begin(), seen.end());
  }
  return track;
}

void write_labels(const fs::path& path, const LabelTrack& labels) {
  std::string text = "#inventory";
  for (const auto& p : labels.inventory) text += "\t" + p;
  text += "\n";
  for (const auto& r : labels.records)
    text += std::to_string(r.frame_index) + "\t" + r.speaker_id + "\t" +
            r.phoneme + "\n";
  write_file_atomic(path, text);
}

void write_meta(const fs::path& path, const MetaEntries& meta) {
  std::string text;
  for (const auto& [k, v] : meta) text += k + "\t" + v + "\n";
  write_file_atomic(path, text);
}

MetaEntries read_meta(const fs::path& path) {
  MetaEntries meta;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    auto tab = lines[i].find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError(where(path, i + 1) + ": malformed metadata line");
    meta.emplace_back(lines[i].substr(0, tab), lines[i].substr(tab + 1));
  }
  return meta;
}

const std::string& meta_value(const MetaEntries& meta, const std::string& key,
                              const fs::path& origin) {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw DataError(origin.string() + ": missing metadata key '" + key + "'");
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t end = s.find(' ', start);
    if (end == std::string::npos) end = s.size();
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

Index parse_count(const std::string& s, const fs::path& origin) {
  Index v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
    throw DataError(origin.string() + ": bad integer '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const fs::path& origin) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw DataError(origin.string() + ": bad number '" + s + "'");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace uscf
