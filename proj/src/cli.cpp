#include "ooskit/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ooskit/detectors.hpp"
#include "ooskit/episodes.hpp"
#include "ooskit/geometry.hpp"
#include "ooskit/metrics.hpp"
#include "ooskit/render.hpp"
#include "ooskit/rng.hpp"
#include "ooskit/training.hpp"

namespace ooskit::cli {

using ojson = nlohmann::ordered_json;

Point parse_point(const std::string& text, Index dim) {
  if (text == "origin") {
    if (dim < 1) throw InvalidArgument("'origin' needs a known dimension");
    return Point::Zero(dim);
  }
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("bad coordinate '" + item + "' in '" + text + "'");
    }
  }
  if (v.empty()) throw InvalidArgument("empty point '" + text + "'");
  Point p = Eigen::Map<Point>(v.data(), static_cast<Index>(v.size()));
  if (dim > 0) require_same_dim(dim, p.size());
  require_finite(p, "point");
  return p;
}

std::vector<Point> parse_point_list(const std::string& text) {
  std::vector<Point> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) out.push_back(parse_point(item));
  }
  if (out.empty()) throw InvalidArgument("no prototypes given");
  return out;
}

namespace {

std::vector<double> to_vec(const Point& p) { return {p.data(), p.data() + p.size()}; }

int resolve_threads(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("OOSKIT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

void emit_json(const ojson& j, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RuntimeError("cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
}

// Prototype configuration shared by geometry and render.
struct ConfigArgs {
  std::string preset;
  std::string prototypes;
  std::string gamma_oos;
  std::string config_file;

  void add_to(CLI::App* app) {
    app->add_option("--preset", preset, "Built-in configuration: collinear | cross");
    app->add_option("--prototypes", prototypes, "Prototypes as 'x,y;x,y;...' (class ids 1..k)");
    app->add_option("--gamma-oos", gamma_oos, "Generic point (comma-separated, or 'origin')");
    app->add_option("--config", config_file, "JSON file {\"prototypes\": [[...]], \"gamma_oos\": [...]}");
  }

  PrototypeContext build() const {
    std::vector<Point> protos;
    std::optional<Point> generic;
    if (!preset.empty()) {
      if (preset == "collinear") {
        protos = {parse_point("0,0"), parse_point("-1,0")};
        generic = parse_point("1,0");
      } else if (preset == "cross") {
        protos = {parse_point("1,0"), parse_point("0,1"), parse_point("-1,0"), parse_point("0,-1")};
        generic = parse_point("0,0");
      } else {
        throw InvalidArgument("unknown preset '" + preset + "' (expected collinear|cross)");
      }
    } else if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw InvalidArgument("cannot open " + config_file);
      nlohmann::json j;
      try {
        in >> j;
        for (const auto& p : j.at("prototypes")) {
          auto v = p.get<std::vector<double>>();
          protos.push_back(Eigen::Map<Point>(v.data(), static_cast<Index>(v.size())));
        }
        if (j.contains("gamma_oos")) {
          auto v = j.at("gamma_oos").get<std::vector<double>>();
          generic = Point(Eigen::Map<Point>(v.data(), static_cast<Index>(v.size())));
        }
      } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(config_file + ": " + e.what());
      }
    } else if (!prototypes.empty()) {
      protos = parse_point_list(prototypes);
    } else {
      throw InvalidArgument("supply --preset, --prototypes, or --config");
    }
    if (protos.empty()) throw InvalidArgument("no prototypes given");
    if (!gamma_oos.empty()) generic = parse_point(gamma_oos, protos.front().size());
    PrototypeContext ctx;
    for (std::size_t i = 0; i < protos.size(); ++i) ctx.prototypes.emplace(static_cast<ClassId>(i + 1), protos[i]);
    ctx.generic = generic;
    require_distinct_points(ctx);
    return ctx;
  }
};

ojson context_json(const PrototypeContext& ctx) {
  ojson j;
  ojson protos = ojson::object();
  for (const auto& [id, p] : ctx.prototypes) protos[std::to_string(id)] = to_vec(p);
  j["prototypes"] = protos;
  j["gamma_oos"] = ctx.generic ? ojson(to_vec(*ctx.generic)) : ojson(nullptr);
  return j;
}

Bounds auto_bounds(const PrototypeContext& ctx, double factor) {
  std::vector<Point> pts;
  for (const auto& [id, p] : ctx.prototypes) pts.push_back(p);
  if (ctx.generic) pts.push_back(*ctx.generic);
  Point lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double spread = std::max((hi - lo).maxCoeff(), 1e-3);
  Bounds b;
  b.xmin = lo[0] - factor * spread;
  b.xmax = hi[0] + factor * spread;
  b.ymin = (lo.size() > 1 ? lo[1] : 0.0) - factor * spread;
  b.ymax = (hi.size() > 1 ? hi[1] : 0.0) + factor * spread;
  return b;
}

ViabilityMode parse_mode(const std::string& s) {
  if (s == "generic") return ViabilityMode::generic;
  if (s == "standard") return ViabilityMode::standard;
  throw InvalidArgument("mode must be standard or generic");
}

ojson check_partition(const PrototypeContext& ctx, long samples, std::uint64_t seed, double tol) {
  const Index d = ctx.dim();
  std::vector<Point> pts;
  for (const auto& [id, p] : ctx.prototypes) pts.push_back(p);
  if (ctx.generic) pts.push_back(*ctx.generic);
  Point lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double spread = std::max((hi - lo).maxCoeff(), 1e-3);

  // Same configuration under a shuffled class-id assignment.
  std::vector<ClassId> ids;
  for (const auto& [id, p] : ctx.prototypes) ids.push_back(id);
  std::vector<ClassId> perm = ids;
  CounterRng prng(seed, 1, StreamDomain::sampling);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[prng.uniform_index(i)]);
  PrototypeContext shuffled;
  shuffled.generic = ctx.generic;
  std::map<ClassId, ClassId> back;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    shuffled.prototypes.emplace(perm[i], ctx.prototypes.at(ids[i]));
    back[perm[i]] = ids[i];
  }

  CounterRng rng(seed, 0, StreamDomain::sampling);
  long boundary = 0, unique = 0, consistent = 0;
  for (long s = 0; s < samples; ++s) {
    Point x(d);
    for (Index j = 0; j < d; ++j) x[j] = lo[j] - 2.0 * spread + rng.uniform() * (hi[j] - lo[j] + 4.0 * spread);
    const CellLabel label = classify_cell(x, ctx, tol);
    if (label.on_boundary) {
      ++boundary;
      continue;
    }
    // Exactly one ordering: distances strictly increase along it.
    bool strict = true;
    double prev = -1.0;
    for (ClassId slot : label.ordering) {
      const double dist = (x - (slot == kOosSlot ? *ctx.generic : ctx.prototypes.at(slot))).norm();
      if (!(dist > prev)) strict = false;
      prev = dist;
    }
    unique += strict;
    CellLabel other = classify_cell(x, shuffled, tol);
    for (auto& slot : other.ordering)
      if (slot != kOosSlot) slot = back.at(slot);
    consistent += other == label;
  }
  const long off = samples - boundary;
  ojson j;
  j["samples"] = samples;
  j["boundary_hits"] = boundary;
  j["off_boundary"] = off;
  j["uniquely_classified"] = unique;
  j["relabel_consistent"] = consistent;
  j["pass"] = boundary == 0 && unique == off && consistent == off;
  return j;
}

ojson check_viable(const PrototypeContext& ctx, ViabilityMode mode) {
  ojson classes = ojson::array();
  for (const auto& [id, p] : ctx.prototypes) {
    const auto sys = viable_system(id, ctx, mode);
    const auto res = region_nonempty(sys);
    ojson c;
    c["class"] = id;
    c["nonempty"] = res.nonempty;
    c["slack"] = res.slack;
    c["witness"] = res.witness ? ojson(to_vec(*res.witness)) : ojson(nullptr);
    ojson rows = ojson::array();
    for (const auto& h : sys.rows) rows.push_back({{"normal", to_vec(h.normal)}, {"offset", h.offset}});
    c["inequalities"] = rows;
    classes.push_back(c);
  }
  ojson j;
  j["mode"] = mode == ViabilityMode::generic ? "generic" : "standard";
  j["classes"] = classes;
  j["pass"] = true;
  return j;
}

ojson check_adjacency(const PrototypeContext& ctx) {
  if (!ctx.generic) throw InvalidArgument("adjacency check needs --gamma-oos");
  ojson classes = ojson::array();
  bool pass = true;
  for (const auto& [id, p] : ctx.prototypes) {
    const auto res = region_nonempty(viable_system(id, ctx, ViabilityMode::generic));
    ojson c;
    c["class"] = id;
    c["viable_nonempty"] = res.nonempty;
    if (res.nonempty) {
      try {
        const auto w = adjacency_witness(*res.witness, id, ctx);
        c["start"] = to_vec(*res.witness);
        c["z"] = to_vec(w.z);
        c["t"] = w.t;
        c["delta"] = w.delta;
        c["adjacent"] = true;
      } catch (const std::exception& e) {
        c["adjacent"] = false;
        c["error"] = e.what();
        pass = false;
      }
    }
    classes.push_back(c);
  }
  ojson j;
  j["classes"] = classes;
  j["pass"] = pass;
  return j;
}

std::optional<Point> resolve_gamma(const std::string& flag, Index dim) {
  if (flag.empty()) return std::nullopt;
  return parse_point(flag, dim);
}

ojson shape_json(const EpisodeShape& s) {
  ojson j;
  j["shots"] = s.shots;
  j["ways"] = s.ways;
  j["queries_in"] = s.queries_in;
  j["queries_out"] = s.queries_out;
  j["oos_ways"] = s.oos_ways ? ojson(*s.oos_ways) : ojson(nullptr);
  return j;
}

struct ShapeArgs {
  EpisodeShape shape;
  int oos_ways = 0;

  void add_to(CLI::App* app) {
    app->add_option("--shots", shape.shots, "Support examples per class")->capture_default_str();
    app->add_option("--ways", shape.ways, "Support classes per episode")->capture_default_str();
    app->add_option("--qin", shape.queries_in, "In-support queries per class")->capture_default_str();
    app->add_option("--qout", shape.queries_out, "Total OOS queries per episode")->capture_default_str();
    app->add_option("--oos-ways", oos_ways, "Draw OOS queries from this many classes (0 = all remaining)");
  }

  EpisodeShape resolved() const {
    EpisodeShape s = shape;
    if (oos_ways > 0) s.oos_ways = oos_ways;
    return s;
  }
};

EmbeddingDataset maybe_split(const EmbeddingDataset& ds, double fraction, std::uint64_t split_seed, bool want_test) {
  if (fraction <= 0.0) return ds;
  auto [train, test] = few_shot_split(ds, fraction, split_seed);
  return want_test ? test : train;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot out-of-support detection toolkit", "ooskit"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads_flag = 0;
  app.add_option("--threads", threads_flag, "Worker threads (default: $OOSKIT_THREADS or 1)");

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic radial embedding dataset (CSV)");
  SynthParams sp;
  std::string synth_out;
  synth->add_option("--classes", sp.total_classes)->capture_default_str();
  synth->add_option("--dim", sp.dim)->capture_default_str();
  synth->add_option("--radius", sp.radius)->capture_default_str();
  synth->add_option("--sigma", sp.sigma)->capture_default_str();
  synth->add_option("--per-class", sp.per_class)->capture_default_str();
  synth->add_option("--seed", sp.seed)->capture_default_str();
  synth->add_option("-o,--output", synth_out, "Output CSV")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Episodic OOS evaluation (AUROC/AUPR x100)");
  std::string eval_data, eval_ckpt, eval_detector = "groos", eval_gamma, eval_out;
  double eval_M = 0.0, eval_threshold = 0.0, eval_fraction = 0.0;
  std::uint64_t eval_seed = 0, eval_split_seed = 0;
  int eval_episodes = 1000;
  bool eval_per_episode = false;
  ShapeArgs eval_shape;
  eval->add_option("--data", eval_data, "Embedding CSV")->required();
  eval->add_option("--checkpoint", eval_ckpt, "Trained head (and LCBO scorer) JSON");
  eval->add_option("--detector", eval_detector, "mindist|lcbo|background|groos|centered-groos")->capture_default_str();
  eval_shape.add_to(eval);
  eval->add_option("--episodes", eval_episodes)->capture_default_str();
  eval->add_option("--seed", eval_seed)->capture_default_str();
  eval->add_option("--gamma-oos", eval_gamma, "Generic point for groos (default: origin)");
  auto* eval_M_opt = eval->add_option("--M", eval_M, "Background constant");
  auto* eval_t_opt = eval->add_option("--threshold", eval_threshold, "Decision threshold (detector's raw orientation)");
  eval->add_flag("--per-episode", eval_per_episode, "Also report per-episode mean and standard error");
  eval->add_option("--test-fraction", eval_fraction, "Evaluate on the test part of a class split of --data");
  eval->add_option("--split-seed", eval_split_seed, "Seed of that split");
  eval->add_option("-o,--output", eval_out, "Report path (default: stdout)");

  // train
  auto* trn = app.add_subcommand("train", "Episodic training of the affine head / LCBO scorer");
  std::string trn_data, trn_mode = "groos", trn_gamma, trn_out, trn_curve, trn_init, trn_lcbo_input = "concat";
  TrainConfig tc;
  double trn_M = 0.0, trn_fraction = 0.0;
  std::uint64_t trn_split_seed = 0;
  ShapeArgs trn_shape;
  std::vector<Index> trn_hidden{64};
  trn->add_option("--data", trn_data, "Embedding CSV")->required();
  trn->add_option("--mode", trn_mode, "standard|groos|background|lcbo")->capture_default_str();
  trn->add_option("--episodes", tc.episodes)->capture_default_str();
  trn_shape.add_to(trn);
  trn->add_option("--seed", tc.seed)->capture_default_str();
  trn->add_option("--lr", tc.adam.lr)->capture_default_str();
  trn->add_option("--weight-decay", tc.adam.weight_decay)->capture_default_str();
  trn->add_option("--beta1", tc.adam.beta1)->capture_default_str();
  trn->add_option("--beta2", tc.adam.beta2)->capture_default_str();
  trn->add_option("--gamma-oos", trn_gamma, "Generic point for groos mode (default: origin)");
  auto* trn_M_opt = trn->add_option("--M", trn_M, "Background constant");
  trn->add_flag("--stop-grad-prototypes", tc.stop_prototype_gradient, "Do not backpropagate through prototypes");
  trn->add_option("--lcbo-hidden", trn_hidden, "LCBO hidden widths")->capture_default_str();
  trn->add_option("--lcbo-input", trn_lcbo_input, "concat|difference|both")->capture_default_str();
  trn->add_option("--init", trn_init, "Start from this checkpoint");
  trn->add_option("--test-fraction", trn_fraction, "Train on the train part of a class split of --data");
  trn->add_option("--split-seed", trn_split_seed, "Seed of that split");
  trn->add_option("-o,--output", trn_out, "Checkpoint JSON")->required();
  trn->add_option("--loss-curve", trn_curve, "Write episode,loss CSV here");

  // geometry
  auto* geo = app.add_subcommand("geometry", "Cell/viability/adjacency checks on a prototype configuration");
  ConfigArgs geo_cfg;
  std::string geo_check = "viable", geo_mode = "generic", geo_out;
  long geo_samples = 10000;
  std::uint64_t geo_seed = 0;
  double geo_tol = 1e-12;
  geo_cfg.add_to(geo);
  geo->add_option("--check", geo_check, "partition|viable|adjacency")->capture_default_str();
  geo->add_option("--mode", geo_mode, "standard|generic")->capture_default_str();
  geo->add_option("--samples", geo_samples)->capture_default_str();
  geo->add_option("--seed", geo_seed)->capture_default_str();
  geo->add_option("--tol", geo_tol)->capture_default_str();
  geo->add_option("-o,--output", geo_out, "Report path (default: stdout)");

  // render
  auto* ren = app.add_subcommand("render", "Render a 2-D decision map as binary PPM");
  ConfigArgs ren_cfg;
  std::string ren_mode = "generic", ren_out, ren_bounds, ren_res = "512x512";
  ren_cfg.add_to(ren);
  ren->add_option("--mode", ren_mode, "standard|generic")->capture_default_str();
  ren->add_option("--bounds", ren_bounds, "xmin,xmax,ymin,ymax (default: fit to prototypes)");
  ren->add_option("--resolution", ren_res, "WIDTHxHEIGHT")->capture_default_str();
  ren->add_option("-o,--output", ren_out, "Output PPM")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const int threads = resolve_threads(threads_flag);
  try {
    if (synth->parsed()) {
      save_dataset(synth_radial(sp), synth_out);
      return 0;
    }

    if (eval->parsed()) {
      EvalConfig cfg;
      cfg.detector = parse_detector(eval_detector);
      cfg.shape = eval_shape.resolved();
      cfg.episodes = eval_episodes;
      cfg.seed = eval_seed;
      cfg.per_episode = eval_per_episode;
      cfg.threads = threads;
      const EmbeddingDataset full = load_dataset(eval_data);
      const EmbeddingDataset ds = maybe_split(full, eval_fraction, eval_split_seed, true);
      cfg.gamma_oos = resolve_gamma(eval_gamma, ds.dim());
      if (!cfg.gamma_oos && cfg.detector == Detector::groos) cfg.gamma_oos = Point::Zero(ds.dim());
      if (*eval_M_opt) cfg.background_constant = eval_M;
      if (*eval_t_opt) cfg.threshold = eval_threshold;
      AffineHead head = AffineHead::identity(ds.dim());
      std::optional<LcboScorer> scorer;
      if (!eval_ckpt.empty()) {
        auto ck = load_checkpoint(eval_ckpt);
        head = ck.head;
        scorer = ck.scorer;
      }
      const MetricsReport report = evaluate(ds, cfg, head, scorer ? &*scorer : nullptr);
      ojson j = report.to_json();
      ojson c;
      c["command"] = "eval";
      c["data"] = eval_data;
      c["checkpoint"] = eval_ckpt.empty() ? ojson(nullptr) : ojson(eval_ckpt);
      c["detector"] = eval_detector;
      c["shape"] = shape_json(cfg.shape);
      c["episodes"] = cfg.episodes;
      c["seed"] = cfg.seed;
      c["gamma_oos"] = cfg.gamma_oos ? ojson(to_vec(*cfg.gamma_oos)) : ojson(nullptr);
      c["M"] = cfg.background_constant ? ojson(*cfg.background_constant) : ojson(nullptr);
      c["threshold"] = cfg.threshold ? ojson(*cfg.threshold) : ojson(nullptr);
      c["test_fraction"] = eval_fraction;
      c["split_seed"] = eval_split_seed;
      c["per_episode"] = cfg.per_episode;
      c["threads"] = threads;
      j["config"] = c;
      j["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch()).count();
      emit_json(j, eval_out, out);
      if (report.metrics_error) {
        err << "error: " << *report.metrics_error << "\n";
        return 1;
      }
      return 0;
    }

    if (trn->parsed()) {
      tc.mode = parse_loss_mode(trn_mode);
      tc.shape = trn_shape.resolved();
      tc.lcbo_hidden = trn_hidden;
      tc.lcbo_input = parse_lcbo_input(trn_lcbo_input);
      const EmbeddingDataset full = load_dataset(trn_data);
      const EmbeddingDataset ds = maybe_split(full, trn_fraction, trn_split_seed, false);
      tc.gamma_oos = resolve_gamma(trn_gamma, ds.dim());
      if (!tc.gamma_oos && tc.mode == LossMode::groos) tc.gamma_oos = Point::Zero(ds.dim());
      if (*trn_M_opt) tc.background_constant = trn_M;
      if (tc.mode == LossMode::background && !tc.background_constant) throw InvalidArgument("background mode needs --M");
      std::optional<AffineHead> init_head;
      std::optional<LcboScorer> init_scorer;
      if (!trn_init.empty()) {
        auto ck = load_checkpoint(trn_init);
        init_head = ck.head;
        init_scorer = ck.scorer;
      }
      const TrainResult res = train(ds, tc, init_head, init_scorer);
      ojson j = checkpoint_to_json(res);
      ojson c;
      c["command"] = "train";
      c["data"] = trn_data;
      c["mode"] = trn_mode;
      c["episodes"] = tc.episodes;
      c["shape"] = shape_json(tc.shape);
      c["seed"] = tc.seed;
      c["lr"] = tc.adam.lr;
      c["weight_decay"] = tc.adam.weight_decay;
      c["beta1"] = tc.adam.beta1;
      c["beta2"] = tc.adam.beta2;
      c["gamma_oos"] = tc.gamma_oos ? ojson(to_vec(*tc.gamma_oos)) : ojson(nullptr);
      c["M"] = tc.background_constant ? ojson(*tc.background_constant) : ojson(nullptr);
      c["stop_grad_prototypes"] = tc.stop_prototype_gradient;
      c["test_fraction"] = trn_fraction;
      c["split_seed"] = trn_split_seed;
      c["init"] = trn_init.empty() ? ojson(nullptr) : ojson(trn_init);
      j["config"] = c;
      emit_json(j, trn_out, out);
      if (!trn_curve.empty()) write_loss_curve(res.losses, trn_curve);
      return 0;
    }

    if (geo->parsed()) {
      const PrototypeContext ctx = geo_cfg.build();
      ojson j;
      j["check"] = geo_check;
      j["configuration"] = context_json(ctx);
      if (geo_check == "partition") {
        if (geo_samples < 1) throw InvalidArgument("--samples must be positive");
        j["result"] = check_partition(ctx, geo_samples, geo_seed, geo_tol);
      } else if (geo_check == "viable") {
        const auto mode = parse_mode(geo_mode);
        if (mode == ViabilityMode::generic && !ctx.generic) throw InvalidArgument("generic mode needs --gamma-oos");
        j["result"] = check_viable(ctx, mode);
      } else if (geo_check == "adjacency") {
        j["result"] = check_adjacency(ctx);
      } else {
        throw InvalidArgument("unknown check '" + geo_check + "' (expected partition|viable|adjacency)");
      }
      ojson c;
      c["command"] = "geometry";
      c["check"] = geo_check;
      c["mode"] = geo_mode;
      c["samples"] = geo_samples;
      c["seed"] = geo_seed;
      c["tol"] = geo_tol;
      j["config"] = c;
      emit_json(j, geo_out, out);
      return j["result"]["pass"].get<bool>() ? 0 : 1;
    }

    if (ren->parsed()) {
      const PrototypeContext ctx = ren_cfg.build();
      const auto mode = parse_mode(ren_mode);
      if (ctx.dim() != 2) throw InvalidArgument("render needs 2-D prototypes, got d=" + std::to_string(ctx.dim()));
      Bounds b = auto_bounds(ctx, 1.0);
      if (!ren_bounds.empty()) {
        const Point v = parse_point(ren_bounds, 4);
        b = {v[0], v[1], v[2], v[3]};
      }
      int w = 0, h = 0;
      char x = 0;
      std::istringstream rs(ren_res);
      if (!(rs >> w >> x >> h) || x != 'x' || w < 1 || h < 1) throw InvalidArgument("--resolution must look like 512x512");
      const auto map = render_decision_map(ctx, mode, b, w, h, threads);
      write_ppm(map.image, ren_out);
      return 0;
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace ooskit::cli
