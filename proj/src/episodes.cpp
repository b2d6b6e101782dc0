#include "ooskit/episodes.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/QR>

#include "ooskit/rng.hpp"

namespace ooskit {

void EmbeddingDataset::add(std::string id, const std::string& label_token, Point point) {
  if (dim_ == 0) dim_ = point.size();
  require_same_dim(dim_, point.size());
  require_finite(point, "record");
  if (!ids_.insert(id).second) throw InvalidArgument("duplicate record id '" + id + "'");
  const ClassId next = tokens_.empty() ? 0 : tokens_.rbegin()->first + 1;
  auto [it, inserted] = token_ids_.try_emplace(label_token, next);
  if (inserted) tokens_[it->second] = label_token;
  by_class_[it->second].push_back(records_.size());
  records_.push_back({std::move(id), it->second, std::move(point)});
}

std::vector<ClassId> EmbeddingDataset::classes() const {
  std::vector<ClassId> out;
  for (const auto& [c, idx] : by_class_) out.push_back(c);
  return out;
}

const std::vector<std::size_t>& EmbeddingDataset::records_of(ClassId c) const {
  const auto it = by_class_.find(c);
  if (it == by_class_.end()) throw InvalidArgument("class " + std::to_string(c) + " not in dataset");
  return it->second;
}

EmbeddingDataset EmbeddingDataset::subset(const std::set<ClassId>& keep) const {
  EmbeddingDataset out(dim_);
  for (const auto& r : records_) {
    if (!keep.count(r.label)) continue;
    out.ids_.insert(r.id);
    out.by_class_[r.label].push_back(out.records_.size());
    if (!out.tokens_.count(r.label)) {
      out.tokens_[r.label] = tokens_.at(r.label);
      out.token_ids_[tokens_.at(r.label)] = r.label;
    }
    out.records_.push_back(r);
  }
  return out;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& v) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(v);
}

}  // namespace

EmbeddingDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open dataset " + path);
  std::string line;
  long lineno = 0;
  auto strip = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(in, line)) throw DataError(path, 1, "missing header");
  ++lineno;
  strip(line);
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
    throw DataError(path, lineno, "header must be id,label,f0,...");
  }
  const Index d = static_cast<Index>(header.size()) - 2;
  for (Index j = 0; j < d; ++j) {
    if (header[j + 2] != "f" + std::to_string(j)) {
      throw DataError(path, lineno, "expected column f" + std::to_string(j));
    }
  }
  EmbeddingDataset ds(d);
  while (std::getline(in, line)) {
    ++lineno;
    strip(line);
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (static_cast<Index>(fields.size()) != d + 2) {
      throw DataError(path, lineno, "expected " + std::to_string(d + 2) + " fields, found " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw DataError(path, lineno, "empty id");
    if (fields[1].empty()) throw DataError(path, lineno, "empty label");
    Point p(d);
    for (Index j = 0; j < d; ++j) {
      if (!parse_double(fields[j + 2], p[j])) {
        throw DataError(path, lineno, "bad number '" + std::string(fields[j + 2]) + "' in column f" + std::to_string(j));
      }
    }
    try {
      ds.add(std::string(fields[0]), std::string(fields[1]), std::move(p));
    } catch (const InvalidArgument& e) {
      throw DataError(path, lineno, e.what());
    }
  }
  if (ds.size() == 0) throw DataError(path, lineno, "no records");
  return ds;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void save_dataset(const EmbeddingDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open " + path + " for writing");
  out << "id,label";
  for (Index j = 0; j < ds.dim(); ++j) out << ",f" << j;
  out << "\n";
  for (const auto& r : ds.records()) {
    out << r.id << "," << ds.label_token(r.label);
    for (Index j = 0; j < r.point.size(); ++j) out << "," << format_double(r.point[j]);
    out << "\n";
  }
  if (!out) throw RuntimeError("failed writing " + path);
}

namespace {

// Moves `count` uniformly chosen elements to the front (partial Fisher-Yates).
template <typename T>
void choose_front(std::vector<T>& items, std::size_t count, CounterRng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_index(items.size() - i);
    std::swap(items[i], items[j]);
  }
}

}  // namespace

std::pair<EmbeddingDataset, EmbeddingDataset> few_shot_split(const EmbeddingDataset& ds, double test_fraction,
                                                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test fraction must lie in (0, 1)");
  auto classes = ds.classes();
  if (classes.size() < 2) throw InvalidArgument("a few-shot split needs at least 2 classes");
  const auto total = static_cast<long>(classes.size());
  long n_test = static_cast<long>(std::floor(test_fraction * static_cast<double>(total)));
  n_test = std::clamp(n_test, 1L, total - 1);
  CounterRng rng(seed, 0, StreamDomain::split);
  choose_front(classes, classes.size(), rng);
  std::set<ClassId> test(classes.begin(), classes.begin() + n_test);
  std::set<ClassId> train(classes.begin() + n_test, classes.end());
  return {ds.subset(train), ds.subset(test)};
}

std::vector<Point> Episode::all_points() const {
  std::vector<Point> out;
  for (const auto& [c, pts] : support) out.insert(out.end(), pts.begin(), pts.end());
  for (const auto& q : queries) out.push_back(q.point);
  return out;
}

std::size_t Episode::num_oos() const {
  return static_cast<std::size_t>(std::count_if(queries.begin(), queries.end(), [](const Query& q) { return q.is_oos; }));
}

Episode sample_episode(const EmbeddingDataset& ds, const EpisodeShape& shape, std::uint64_t seed,
                       std::uint64_t index) {
  if (shape.shots < 1 || shape.ways < 1 || shape.queries_in < 0 || shape.queries_out < 0) {
    throw InvalidArgument("episode shape needs shots, ways >= 1 and nonnegative query counts");
  }
  auto classes = ds.classes();
  const auto k = static_cast<std::size_t>(shape.ways);
  const bool need_oos = shape.queries_out > 0;
  if (classes.size() < k + (need_oos ? 1 : 0)) {
    throw InvalidArgument("dataset has " + std::to_string(classes.size()) + " classes; episodes need " +
                          (need_oos ? "more than " : "at least ") + std::to_string(k));
  }
  CounterRng rng(seed, index, StreamDomain::episode);
  choose_front(classes, k, rng);

  Episode ep;
  const auto per_class = static_cast<std::size_t>(shape.shots + shape.queries_in);
  for (std::size_t ci = 0; ci < k; ++ci) {
    const ClassId c = classes[ci];
    auto idx = ds.records_of(c);
    if (idx.size() < per_class) {
      throw InvalidArgument("class '" + ds.label_token(c) + "' has " + std::to_string(idx.size()) +
                            " records; episode needs " + std::to_string(per_class));
    }
    choose_front(idx, per_class, rng);
    ep.c_in.insert(c);
    auto& sup = ep.support[c];
    auto& sup_ids = ep.support_ids[c];
    for (std::size_t j = 0; j < per_class; ++j) {
      const Record& r = ds.record(idx[j]);
      if (j < static_cast<std::size_t>(shape.shots)) {
        sup.push_back(r.point);
        sup_ids.push_back(r.id);
      } else {
        ep.queries.push_back({r.point, c, false, r.id});
      }
    }
  }

  if (need_oos) {
    std::vector<ClassId> rest(classes.begin() + k, classes.end());
    std::sort(rest.begin(), rest.end());
    if (shape.oos_ways) {
      const auto w = static_cast<std::size_t>(*shape.oos_ways);
      if (w < 1 || w > rest.size()) {
        throw InvalidArgument("oos_ways must be between 1 and " + std::to_string(rest.size()));
      }
      choose_front(rest, w, rng);
      rest.resize(w);
      std::sort(rest.begin(), rest.end());
    }
    std::vector<std::size_t> pool;
    for (ClassId c : rest) {
      const auto& idx = ds.records_of(c);
      pool.insert(pool.end(), idx.begin(), idx.end());
    }
    const auto q_out = static_cast<std::size_t>(shape.queries_out);
    if (pool.size() < q_out) {
      throw InvalidArgument("out-of-support classes hold " + std::to_string(pool.size()) +
                            " records; episode needs " + std::to_string(q_out));
    }
    choose_front(pool, q_out, rng);
    for (std::size_t j = 0; j < q_out; ++j) {
      const Record& r = ds.record(pool[j]);
      ep.queries.push_back({r.point, r.label, true, r.id});
      ep.c_out.insert(r.label);
    }
  }
  return ep;
}

nlohmann::ordered_json episode_to_json(const Episode& ep) {
  auto vec = [](const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); };
  nlohmann::ordered_json j;
  j["c_in"] = std::vector<ClassId>(ep.c_in.begin(), ep.c_in.end());
  j["c_out"] = std::vector<ClassId>(ep.c_out.begin(), ep.c_out.end());
  auto support = nlohmann::ordered_json::array();
  for (const auto& [c, pts] : ep.support) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      support.push_back({{"id", ep.support_ids.at(c)[i]}, {"label", c}, {"point", vec(pts[i])}});
    }
  }
  j["support"] = std::move(support);
  auto queries = nlohmann::ordered_json::array();
  for (const auto& q : ep.queries) {
    queries.push_back({{"id", q.record_id}, {"label", q.true_label}, {"is_oos", q.is_oos}, {"point", vec(q.point)}});
  }
  j["queries"] = std::move(queries);
  return j;
}

std::vector<Point> synth_radial_means(const SynthParams& p) {
  if (p.total_classes < 2) throw InvalidArgument("synthetic data needs at least 2 classes");
  if (p.dim < 1) throw InvalidArgument("dimension must be positive");
  if (!(p.radius > 0.0) || !(p.sigma > 0.0)) throw InvalidArgument("radius and sigma must be positive");
  if (p.per_class < 1) throw InvalidArgument("per-class count must be positive");
  const auto C = static_cast<Index>(p.total_classes);
  std::vector<Point> means;
  if (p.dim == 2) {
    for (Index c = 0; c < C; ++c) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(C);
      Point m(2);
      m << std::cos(a), std::sin(a);
      // Snap tiny rounding residue so that e.g. C=4 lands exactly on the axes.
      for (Index j = 0; j < 2; ++j)
        if (std::abs(m[j]) < 1e-15) m[j] = 0.0;
      means.push_back(p.radius * m);
    }
    return means;
  }
  CounterRng rng(p.seed, 0, StreamDomain::synth);
  Eigen::MatrixXd g(p.dim, C);
  for (Index c = 0; c < C; ++c)
    for (Index j = 0; j < p.dim; ++j) g(j, c) = rng.normal();
  if (C <= p.dim) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p.dim, C);
    for (Index c = 0; c < C; ++c) means.push_back(p.radius * q.col(c));
  } else {
    for (Index c = 0; c < C; ++c) means.push_back(p.radius * g.col(c).normalized());
  }
  return means;
}

EmbeddingDataset synth_radial(const SynthParams& p) {
  const auto means = synth_radial_means(p);
  EmbeddingDataset ds(p.dim);
  for (int c = 0; c < p.total_classes; ++c) {
    CounterRng rng(p.seed, static_cast<std::uint64_t>(c) + 1, StreamDomain::synth);
    for (int i = 0; i < p.per_class; ++i) {
      Point x(p.dim);
      for (Index j = 0; j < p.dim; ++j) x[j] = means[c][j] + p.sigma * rng.normal();
      std::ostringstream id;
      id << "c" << c << "_" << i;
      ds.add(id.str(), "c" + std::to_string(c), std::move(x));
    }
  }
  return ds;
}

}  // namespace ooskit
