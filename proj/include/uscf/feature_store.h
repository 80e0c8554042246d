// uscf/feature_store.h

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

#ifndef USCF_FEATURE_STORE_H_
#define USCF_FEATURE_STORE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "uscf/linalg.h"

namespace uscf {

namespace fs = std::filesystem;

// FMAT v1, little-endian throughout:
//   offset  0  "USCF" magic
//   offset  4  u8  version (1)
//   offset  5  u8  dtype (1 = float32)
//   offset  6  u16 reserved (0)
//   offset  8  u32 frame rate in frames per second (0 = unspecified)
//   offset 12  u64 rows
//   offset 20  u64 cols
//   offset 28  rows * cols float32, row-major
inline constexpr std::uint8_t kFmatVersion = 1;
inline constexpr std::uint8_t kFmatDtypeFloat32 = 1;
inline constexpr std::size_t kFmatPreambleBytes = 12;
inline constexpr std::size_t kFmatHeaderBytes = 28;

/// Frame rate of SSL features (one frame per 20 ms).
inline constexpr std::uint32_t kDefaultFrameRate = 50;

struct FeatureFile {
  fs::path path;
  Matrix matrix;
  std::uint32_t frame_rate = kDefaultFrameRate;
};

/// Reads an FMAT file. Values are widened from float32, so a matrix read
/// back from disk is bit-identical to the float32 payload.
FeatureFile read_feature_file(const fs::path& path);
Matrix read_fmat(const fs::path& path);

/// Writes atomically (temp file + rename). Entries are narrowed to float32;
/// non-finite entries, or entries that overflow float32, are rejected.
void write_fmat(const fs::path& path, const Matrix& m,
                std::uint32_t frame_rate = 0);

/// Serialized FMAT bytes for m.
std::string encode_fmat(const Matrix& m, std::uint32_t frame_rate = 0);
Matrix decode_fmat(const std::string& bytes, const std::string& origin,
                   std::uint32_t* frame_rate = nullptr);

/// Rounds every entry to the nearest float32.
Matrix round_to_float(const Matrix& m);

Index frames_for_seconds(double seconds,
                         std::uint32_t frame_rate = kDefaultFrameRate);
double seconds_for_frames(Index frames,
                          std::uint32_t frame_rate = kDefaultFrameRate);

struct ManifestEntry {
  std::string speaker_id;
  fs::path path;
};

/// "speaker_id<TAB>relative_path" per line; '#' starts a comment line.
/// Relative paths resolve against the manifest's directory.
struct Manifest {
  std::vector<ManifestEntry> entries;

  /// Speaker ids in order of first appearance.
  std::vector<std::string> speakers() const;
  std::vector<fs::path> files_for(const std::string& speaker_id) const;
};

Manifest load_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const Manifest& manifest);

struct LabelRecord {
  Index frame_index = 0;
  std::string speaker_id;
  std::string phoneme;
};

/// "frame_index<TAB>speaker_id<TAB>phoneme" per line. An optional
/// "#inventory<TAB>AA<TAB>AE..." line declares the phoneme inventory; when
/// absent the inventory is the set of labels that occur.
struct LabelTrack {
  std::vector<LabelRecord> records;
  std::vector<std::string> inventory;
};

LabelTrack load_labels(const fs::path& path);
void write_labels(const fs::path& path, const LabelTrack& labels);

/// Ordered key/value text file ("key<TAB>value" per line) used for bundle
/// metadata.
using MetaEntries = std::vector<std::pair<std::string, std::string>>;
void write_meta(const fs::path& path, const MetaEntries& meta);
MetaEntries read_meta(const fs::path& path);
const std::string& meta_value(const MetaEntries& meta, const std::string& key,
                              const fs::path& origin);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const fs::path& path, const std::string& contents);
std::string read_file(const fs::path& path);

/// Splits on TAB, keeping empty fields.
std::vector<std::string> split_tabs(const std::string& line);

/// Splits on single spaces, dropping empty pieces.
std::vector<std::string> split_words(const std::string& s);

/// Parses a non-negative integer; DataError naming `origin` otherwise.
Index parse_count(const std::string& s, const fs::path& origin);

/// Parses a finite double; DataError naming `origin` otherwise.
double parse_real(const std::string& s, const fs::path& origin);

/// Shortest text form that reads back to the same double.
std::string format_double(double v);

}  // namespace uscf

#endif  // USCF_FEATURE_STORE_H_
