#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ooskit/metric_core.hpp"

namespace ooskit {

struct Record {
  std::string id;
  ClassId label = 0;
  Point point;
};

/// Labeled embeddings of one dimension. Class ids are dense from 0 in
/// first-seen order when loaded; splits keep the parent's ids and tokens.
class EmbeddingDataset {
 public:
  EmbeddingDataset() = default;
  explicit EmbeddingDataset(Index dim) : dim_(dim) {}

  // Appends a record under the given label token, allocating a class id on
  // first sight. Throws on duplicate id or wrong dimension.
  void add(std::string id, const std::string& label_token, Point point);

  Index dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }
  const Record& record(std::size_t i) const { return records_[i]; }

  // Ascending class ids present.
  std::vector<ClassId> classes() const;
  const std::vector<std::size_t>& records_of(ClassId c) const;
  const std::string& label_token(ClassId c) const { return tokens_.at(c); }

  // Subset restricted to the given classes, preserving record order and ids.
  EmbeddingDataset subset(const std::set<ClassId>& keep) const;

  // Copy with every point mapped through f.
  template <typename F>
  EmbeddingDataset transformed(F&& f) const {
    EmbeddingDataset out = *this;
    for (auto& r : out.records_) r.point = f(r.point);
    return out;
  }

 private:
  Index dim_ = 0;
  std::vector<Record> records_;
  std::map<ClassId, std::vector<std::size_t>> by_class_;
  std::map<ClassId, std::string> tokens_;
  std::map<std::string, ClassId> token_ids_;
  std::set<std::string> ids_;
};

/// CSV: header `id,label,f0,...,f{d-1}`.
EmbeddingDataset load_dataset(const std::string& path);
void save_dataset(const EmbeddingDataset& ds, const std::string& path);
std::string format_double(double v);

/// Class-disjoint split; test gets floor(fraction * classes) classes,
/// clamped to [1, classes - 1].
std::pair<EmbeddingDataset, EmbeddingDataset> few_shot_split(const EmbeddingDataset& ds, double test_fraction,
                                                              std::uint64_t seed);

struct EpisodeShape {
  int shots = 5;
  int ways = 5;
  int queries_in = 8;   // per support class
  int queries_out = 40; // total OOS queries
  std::optional<int> oos_ways;  // restrict OOS queries to this many classes
};

struct Query {
  Point point;
  ClassId true_label = 0;
  bool is_oos = false;
  std::string record_id;
};

struct Episode {
  std::map<ClassId, std::vector<Point>> support;
  std::map<ClassId, std::vector<std::string>> support_ids;
  std::vector<Query> queries;
  std::set<ClassId> c_in;
  std::set<ClassId> c_out;

  // Every support and query point, support first (ascending class id).
  std::vector<Point> all_points() const;
  std::size_t num_oos() const;
};

/// Episode `index` of the stream keyed by `seed`; independent of which other
/// indices are sampled or in which order.
Episode sample_episode(const EmbeddingDataset& ds, const EpisodeShape& shape, std::uint64_t seed,
                       std::uint64_t index);

nlohmann::ordered_json episode_to_json(const Episode& ep);

struct SynthParams {
  int total_classes = 8;
  Index dim = 2;
  double radius = 1.0;
  double sigma = 0.1;
  int per_class = 100;
  std::uint64_t seed = 0;
};

/// Class means on a sphere of the given radius (evenly spaced on the circle
/// when d = 2, orthonormal when classes <= d, random unit directions
/// otherwise) with isotropic Gaussian spread.
EmbeddingDataset synth_radial(const SynthParams& p);
std::vector<Point> synth_radial_means(const SynthParams& p);

}  // namespace ooskit
