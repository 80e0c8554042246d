// src/synth.cc

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

#include "uscf/synth.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "uscf/error.h"

namespace uscf {

namespace {

using ColMatrix = Eigen::MatrixXd;

ColMatrix orthonormal_columns(const ColMatrix& g) {
  Eigen::HouseholderQR<ColMatrix> qr(g);
  return qr.householderQ() * ColMatrix::Identity(g.rows(), g.cols());
}

std::string speaker_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%02zu", prefix, i);
  return buf;
}

void validate(const WorldParams& p) {
  if (p.content_rank < 1 || p.dim <= p.content_rank)
    throw DataError("generate_world: need 1 <= rank < dim");
  if (p.speakers < 1 || p.extras < 0)
    throw DataError("generate_world: need at least one seen speaker");
  if (p.frames < 1 || p.extra_frames < 0)
    throw DataError("generate_world: frame counts must be positive");
  if (p.clusters < 2) throw DataError("generate_world: need at least 2 clusters");
  if (!(p.beta >= 0.0) || !(p.noise >= 0.0) || !(p.cluster_jitter >= 0.0))
    throw DataError("generate_world: beta, noise and jitter must be >= 0");
  if (p.strict &&
      p.dim - p.content_rank < (p.speakers + p.extras) * p.content_rank) {
    throw DataError(
        "generate_world: infeasible orthogonality dimensions (need dim - rank "
        ">= (speakers + extras) * rank in strict mode)");
  }
}

}  // namespace

std::string phoneme_name(Index cluster) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ph%02lld", static_cast<long long>(cluster));
  return buf;
}

Matrix SynthWorld::speaker_matrix(std::size_t j) const {
  return t_content + params.beta * speakers.at(j).timbre;
}

Matrix SynthWorld::content_rows(std::size_t j,
                                std::span<const Index> frames) const {
  const auto& prov = speakers.at(j).provenance;
  std::vector<Index> rows;
  rows.reserve(frames.size());
  for (Index f : frames) rows.push_back(prov.at(static_cast<std::size_t>(f)).content_row);
  return take_rows(c_star, rows);
}

Matrix SynthWorld::clean_features(std::size_t j) const {
  std::vector<Index> frames(speakers.at(j).provenance.size());
  std::iota(frames.begin(), frames.end(), Index{0});
  return matmul(content_rows(j, frames), speaker_matrix(j));
}

std::vector<std::size_t> SynthWorld::seen() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < speakers.size(); ++j)
    if (speakers[j].seen) out.push_back(j);
  return out;
}

std::vector<std::size_t> SynthWorld::unseen() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < speakers.size(); ++j)
    if (!speakers[j].seen) out.push_back(j);
  return out;
}

std::size_t SynthWorld::index_of(const std::string& id) const {
  for (std::size_t j = 0; j < speakers.size(); ++j)
    if (speakers[j].id == id) return j;
  throw DataError("unknown speaker id '" + id + "'");
}

LabelTrack SynthWorld::labels(std::size_t j) const {
  LabelTrack track;
  for (Index c = 0; c < params.clusters; ++c) track.inventory.push_back(phoneme_name(c));
  const auto& spk = speakers.at(j);
  for (std::size_t i = 0; i < spk.provenance.size(); ++i)
    track.records.push_back({static_cast<Index>(i), spk.id,
                             phoneme_name(spk.provenance[i].cluster)});
  return track;
}

Matrix SynthWorld::all_features() const {
  std::vector<Matrix> blocks;
  for (const auto& s : speakers) blocks.push_back(s.features);
  return vstack(blocks);
}

LabelTrack SynthWorld::all_labels() const {
  LabelTrack track;
  for (Index c = 0; c < params.clusters; ++c) track.inventory.push_back(phoneme_name(c));
  Index at = 0;
  for (const auto& s : speakers)
    for (const auto& o : s.provenance)
      track.records.push_back({at++, s.id, phoneme_name(o.cluster)});
  return track;
}

SynthWorld generate_world(const WorldParams& params) {
  validate(params);
  const Index r = params.content_rank;
  const Index d = params.dim;
  const Index n = params.frames;
  const auto total = static_cast<std::size_t>(params.speakers + params.extras);

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto gaussian = [&](Index rows, Index cols) {
    ColMatrix g(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) g(i, j) = gauss(rng);
    return g;
  };

  SynthWorld world;
  world.params = params;

  // Content and timbre subspaces.
  std::vector<Matrix> timbre(total);
  if (params.strict) {
    const ColMatrix q =
        orthonormal_columns(gaussian(d, r * (1 + static_cast<Index>(total))));
    world.t_content = q.leftCols(r).transpose();
    for (std::size_t j = 0; j < total; ++j)
      timbre[j] = q.middleCols(r * (1 + static_cast<Index>(j)), r).transpose();
  } else {
    const ColMatrix t = orthonormal_columns(gaussian(d, r));
    world.t_content = t.transpose();
    for (std::size_t j = 0; j < total; ++j) {
      ColMatrix g = gaussian(d, r);
      g -= t * (t.transpose() * g);
      timbre[j] = orthonormal_columns(g).transpose();
    }
  }
  world.t_content = round_to_float(world.t_content);
  for (auto& b : timbre) b = round_to_float(b);

  // Cluster-structured content rows.
  const ColMatrix centroids = gaussian(params.clusters, r);
  world.c_star.resize(n, r);
  world.row_cluster.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index c = i % params.clusters;
    world.row_cluster[static_cast<std::size_t>(i)] = c;
    for (Index k = 0; k < r; ++k)
      world.c_star(i, k) = centroids(c, k) + params.cluster_jitter * gauss(rng);
  }
  world.c_star = round_to_float(world.c_star);

  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < total; ++j) {
    SynthSpeaker spk;
    spk.seen = j < static_cast<std::size_t>(params.speakers);
    spk.id = spk.seen ? speaker_name("spk", j)
                      : speaker_name("new", j - static_cast<std::size_t>(params.speakers));
    spk.timbre = timbre[j];

    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Index> rows = perm;
    if (!spk.seen) {
      const Index count = params.extra_frames > 0 ? params.extra_frames : n;
      rows.resize(static_cast<std::size_t>(std::min(count, n)));
      std::uniform_int_distribution<Index> pick(0, n - 1);
      for (Index extra = n; extra < count; ++extra) rows.push_back(pick(rng));
    }
    for (Index row : rows)
      spk.provenance.push_back({row, world.row_cluster[static_cast<std::size_t>(row)]});

    const Matrix m = timbre[j] * params.beta + world.t_content;
    Matrix x = matmul(take_rows(world.c_star, rows), m);
    if (params.noise > 0.0) {
      for (Index i = 0; i < x.rows(); ++i)
        for (Index k = 0; k < d; ++k) x(i, k) += params.noise * gauss(rng);
    }
    spk.features = round_to_float(x);
    world.speakers.push_back(std::move(spk));
  }

  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = i + 1; j < total; ++j)
      world.timbre_overlap = std::max(
          world.timbre_overlap, max_abs(matmul(timbre[i], timbre[j].transpose())));
  return world;
}

namespace {

void write_provenance(const fs::path& path, const SynthSpeaker& spk) {
  std::string text = "#frame\tcontent_row\tcluster\n";
  for (std::size_t i = 0; i < spk.provenance.size(); ++i)
    text += std::to_string(i) + "\t" + std::to_string(spk.provenance[i].content_row) +
            "\t" + std::to_string(spk.provenance[i].cluster) + "\n";
  write_file_atomic(path, text);
}

std::vector<FrameOrigin> read_provenance(const fs::path& path) {
  std::vector<FrameOrigin> out;
  std::string text = read_file(path);
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty() || line[0] == '#') continue;
    auto f = split_tabs(line);
    if (f.size() != 3 || parse_count(f[0], path) != static_cast<Index>(out.size()))
      throw DataError(path.string() + ": malformed provenance line");
    out.push_back({parse_count(f[1], path), parse_count(f[2], path)});
  }
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

}  // namespace

void emit_world(const SynthWorld& world, const fs::path& out_dir) {
  const WorldParams& p = world.params;
  fs::create_directories(out_dir / "features");
  fs::create_directories(out_dir / "labels");
  fs::create_directories(out_dir / "truth");

  Manifest seen, unseen;
  std::vector<std::string> seen_ids, unseen_ids;
  for (const auto& spk : world.speakers) {
    const fs::path rel = fs::path("features") / (spk.id + ".fmat");
    write_fmat(out_dir / rel, spk.features, kDefaultFrameRate);
    write_labels(out_dir / "labels" / (spk.id + ".tsv"),
                 world.labels(world.index_of(spk.id)));
    write_fmat(out_dir / "truth" / ("timbre_" + spk.id + ".fmat"), spk.timbre);
    write_provenance(out_dir / "truth" / ("provenance_" + spk.id + ".tsv"), spk);
    (spk.seen ? seen : unseen).entries.push_back({spk.id, rel});
    (spk.seen ? seen_ids : unseen_ids).push_back(spk.id);
  }
  write_manifest(out_dir / "manifest.tsv", seen);
  if (!unseen.entries.empty()) write_manifest(out_dir / "unseen.tsv", unseen);
  write_fmat(out_dir / "all.fmat", world.all_features(), kDefaultFrameRate);
  write_labels(out_dir / "all.tsv", world.all_labels());

  write_fmat(out_dir / "truth" / "c_star.fmat", world.c_star);
  write_fmat(out_dir / "truth" / "t_content.fmat", world.t_content);
  Matrix clusters(static_cast<Index>(world.row_cluster.size()), 1);
  for (std::size_t i = 0; i < world.row_cluster.size(); ++i)
    clusters(static_cast<Index>(i), 0) = static_cast<double>(world.row_cluster[i]);
  write_fmat(out_dir / "truth" / "row_cluster.fmat", clusters);

  write_meta(out_dir / "world.meta",
             {{"format", "uscf-world 1"},
              {"content_rank", std::to_string(p.content_rank)},
              {"dim", std::to_string(p.dim)},
              {"speakers", std::to_string(p.speakers)},
              {"extras", std::to_string(p.extras)},
              {"frames", std::to_string(p.frames)},
              {"extra_frames", std::to_string(p.extra_frames)},
              {"clusters", std::to_string(p.clusters)},
              {"beta", format_double(p.beta)},
              {"noise", format_double(p.noise)},
              {"cluster_jitter", format_double(p.cluster_jitter)},
              {"strict", p.strict ? "1" : "0"},
              {"seed", std::to_string(p.seed)},
              {"timbre_overlap", format_double(world.timbre_overlap)},
              {"seen", join(seen_ids)},
              {"unseen", join(unseen_ids)}});
}

SynthWorld load_world(const fs::path& dir) {
  const fs::path meta_path = dir / "world.meta";
  const MetaEntries meta = read_meta(meta_path);
  auto count = [&](const char* key) {
    return parse_count(meta_value(meta, key, meta_path), meta_path);
  };
  auto real = [&](const char* key) {
    return parse_real(meta_value(meta, key, meta_path), meta_path);
  };

  SynthWorld world;
  WorldParams& p = world.params;
  p.content_rank = count("content_rank");
  p.dim = count("dim");
  p.speakers = count("speakers");
  p.extras = count("extras");
  p.frames = count("frames");
  p.extra_frames = count("extra_frames");
  p.clusters = count("clusters");
  p.beta = real("beta");
  p.noise = real("noise");
  p.cluster_jitter = real("cluster_jitter");
  p.strict = meta_value(meta, "strict", meta_path) == "1";
  p.seed = static_cast<std::uint64_t>(
      std::stoull(meta_value(meta, "seed", meta_path)));
  world.timbre_overlap = real("timbre_overlap");

  world.c_star = read_fmat(dir / "truth" / "c_star.fmat");
  world.t_content = read_fmat(dir / "truth" / "t_content.fmat");
  const Matrix clusters = read_fmat(dir / "truth" / "row_cluster.fmat");
  for (Index i = 0; i < clusters.rows(); ++i)
    world.row_cluster.push_back(static_cast<Index>(clusters(i, 0)));

  auto load_speaker = [&](const std::string& id, bool seen) {
    SynthSpeaker spk;
    spk.id = id;
    spk.seen = seen;
    spk.features = read_fmat(dir / "features" / (id + ".fmat"));
    spk.timbre = read_fmat(dir / "truth" / ("timbre_" + id + ".fmat"));
    spk.provenance = read_provenance(dir / "truth" / ("provenance_" + id + ".tsv"));
    if (spk.features.rows() != static_cast<Index>(spk.provenance.size()) ||
        spk.features.cols() != p.dim || spk.timbre.rows() != p.content_rank ||
        spk.timbre.cols() != p.dim) {
      throw DataError(dir.string() + ": inconsistent files for speaker " + id);
    }
    for (const auto& o : spk.provenance)
      if (o.content_row >= world.c_star.rows())
        throw DataError(dir.string() + ": provenance row out of range for " + id);
    world.speakers.push_back(std::move(spk));
  };
  for (const auto& id : split_words(meta_value(meta, "seen", meta_path)))
    load_speaker(id, true);
  for (const auto& id : split_words(meta_value(meta, "unseen", meta_path)))
    load_speaker(id, false);

  if (world.c_star.cols() != p.content_rank || world.t_content.rows() != p.content_rank ||
      world.t_content.cols() != p.dim ||
      static_cast<Index>(world.row_cluster.size()) != world.c_star.rows() ||
      static_cast<Index>(world.seen().size()) != p.speakers ||
      static_cast<Index>(world.unseen().size()) != p.extras) {
    throw DataError(dir.string() + ": inconsistent world bundle");
  }
  return world;
}

}  // namespace uscf
