#include "ooskit/training.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace ooskit {

LossMode parse_loss_mode(std::string_view name) {
  if (name == "standard") return LossMode::standard;
  if (name == "groos") return LossMode::groos;
  if (name == "background") return LossMode::background;
  if (name == "lcbo") return LossMode::lcbo;
  throw InvalidArgument("unknown training mode '" + std::string(name) + "' (expected standard|groos|background|lcbo)");
}

std::string_view loss_mode_name(LossMode m) {
  switch (m) {
    case LossMode::standard: return "standard";
    case LossMode::groos: return "groos";
    case LossMode::background: return "background";
    case LossMode::lcbo: return "lcbo";
  }
  return "?";
}

namespace {

double log_sum_exp_neg(const Eigen::VectorXd& d) {
  const double lo = d.minCoeff();
  return -lo + std::log((-(d.array() - lo)).exp().sum());
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// Gradient of ||a - b|| with respect to a; zero at a == b.
Eigen::VectorXd unit_from(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double dist) {
  if (dist == 0.0) return Eigen::VectorXd::Zero(a.size());
  return (a - b) / dist;
}

void check_aux(LossMode mode, const LossAux& aux, Index d) {
  switch (mode) {
    case LossMode::groos:
      if (!aux.gamma_oos) throw InvalidArgument("groos loss requires gamma_oos");
      require_same_dim(d, aux.gamma_oos->size());
      break;
    case LossMode::background:
      if (!aux.background_constant) throw InvalidArgument("background loss requires the constant M");
      break;
    case LossMode::lcbo:
      if (!aux.scorer) throw InvalidArgument("lcbo loss requires a scorer network");
      require_same_dim(d, aux.scorer->embed_dim());
      break;
    case LossMode::standard:
      break;
  }
}

// Shared forward (and optional backward) pass.
double run_loss(const Episode& ep, const AffineHead& head, LossMode mode, const LossAux& aux,
                std::vector<Eigen::VectorXd>* probs, LossGradient* grad) {
  head.validate();
  const Index d = head.dim();
  check_aux(mode, aux, d);
  if (ep.support.empty()) throw InvalidArgument("episode has no support classes");

  std::vector<ClassId> ids;
  std::vector<Eigen::VectorXd> raw_means, protos;
  for (const auto& [c, pts] : ep.support) {
    ids.push_back(c);
    raw_means.push_back(centroid(pts));
    require_same_dim(d, raw_means.back().size());
    protos.push_back(head.W * raw_means.back() + head.b);
  }
  const auto k = static_cast<Index>(ids.size());
  auto slot_of = [&](ClassId c) -> Index {
    for (Index i = 0; i < k; ++i)
      if (ids[i] == c) return i;
    throw InvalidArgument("in-support query label " + std::to_string(c) + " has no support class");
  };

  std::size_t used = 0;
  for (const auto& q : ep.queries)
    if (mode != LossMode::standard || !q.is_oos) ++used;
  if (used == 0) throw InvalidArgument("episode has no queries for this loss mode");
  const double inv_n = 1.0 / static_cast<double>(used);

  std::vector<Eigen::VectorXd> g_proto;
  if (grad) {
    grad->W = Eigen::MatrixXd::Zero(d, d);
    grad->b = Eigen::VectorXd::Zero(d);
    if (mode == LossMode::lcbo) grad->lcbo = aux.scorer->zero_like();
    else grad->lcbo.clear();
    g_proto.assign(k, Eigen::VectorXd::Zero(d));
  }

  double total = 0.0;
  LcboScorer::Trace trace;
  for (const auto& q : ep.queries) {
    if (mode == LossMode::standard && q.is_oos) continue;
    require_same_dim(d, q.point.size());
    const Eigen::VectorXd hq = head.W * q.point + head.b;
    Eigen::VectorXd g_hq = Eigen::VectorXd::Zero(d);

    if (mode == LossMode::lcbo) {
      const LcboScorer& net = *aux.scorer;
      Eigen::VectorXd s(k);
      for (Index i = 0; i < k; ++i) s[i] = net(protos[i], hq);
      Index best = 0;
      for (Index i = 1; i < k; ++i)
        if (s[i] > s[best]) best = i;
      const double phi = s[best];
      const double y = q.is_oos ? 0.0 : 1.0;
      double loss = softplus(phi) - y * phi;
      const double m = s.maxCoeff();
      Eigen::VectorXd soft = (s.array() - m).exp().matrix();
      soft /= soft.sum();
      Eigen::VectorXd upstream = Eigen::VectorXd::Zero(k);
      upstream[best] += sigmoid(phi) - y;
      if (!q.is_oos) {
        const Index t = slot_of(q.true_label);
        loss += -(s[t] - m - std::log((s.array() - m).exp().sum()));
        upstream += soft;
        upstream[t] -= 1.0;
      }
      total += loss;
      if (probs) {
        Eigen::VectorXd out(k + 1);
        out << soft, 1.0 - sigmoid(phi);
        probs->push_back(std::move(out));
      }
      if (grad) {
        for (Index i = 0; i < k; ++i) {
          if (upstream[i] == 0.0) continue;
          net.forward(net.encode(protos[i], hq), &trace);
          const Eigen::VectorXd g_in = net.backward(trace, upstream[i] * inv_n, grad->lcbo);
          Eigen::VectorXd gp, gq;
          net.split_input_gradient(g_in, gp, gq);
          g_proto[i] += gp;
          g_hq += gq;
        }
      }
    } else {
      const Index slots = k + (mode == LossMode::standard ? 0 : 1);
      Eigen::VectorXd dist(slots);
      for (Index i = 0; i < k; ++i) dist[i] = (protos[i] - hq).norm();
      if (mode == LossMode::groos) dist[k] = (*aux.gamma_oos - hq).norm();
      if (mode == LossMode::background) dist[k] = *aux.background_constant;
      const Index t = q.is_oos ? k : slot_of(q.true_label);
      total += dist[t] + log_sum_exp_neg(dist);
      const Eigen::VectorXd p = softmax_neg(dist);
      if (probs) probs->push_back(p);
      if (grad) {
        // dL/dd_j = [j == t] - p_j
        for (Index i = 0; i < k; ++i) {
          const double r = ((i == t) ? 1.0 : 0.0) - p[i];
          const Eigen::VectorXd u = unit_from(protos[i], hq, dist[i]);
          g_proto[i] += r * inv_n * u;
          g_hq -= r * inv_n * u;
        }
        if (mode == LossMode::groos) {
          const double r = ((t == k) ? 1.0 : 0.0) - p[k];
          g_hq -= r * inv_n * unit_from(*aux.gamma_oos, hq, dist[k]);
        }
      }
    }
    if (grad) {
      grad->W.noalias() += g_hq * q.point.transpose();
      grad->b += g_hq;
    }
  }

  if (grad && !aux.stop_prototype_gradient) {
    for (Index i = 0; i < k; ++i) {
      grad->W.noalias() += g_proto[i] * raw_means[i].transpose();
      grad->b += g_proto[i];
    }
  }
  const double loss = total * inv_n;
  if (grad) grad->loss = loss;
  return loss;
}

}  // namespace

LossResult episodic_loss(const Episode& ep, const AffineHead& head, LossMode mode, const LossAux& aux) {
  LossResult out;
  out.loss = run_loss(ep, head, mode, aux, &out.probabilities, nullptr);
  return out;
}

LossGradient grad_episodic_loss(const Episode& ep, const AffineHead& head, LossMode mode, const LossAux& aux) {
  LossGradient g;
  run_loss(ep, head, mode, aux, nullptr, &g);
  return g;
}

Adam::Adam(AdamConfig cfg, Index num_params)
    : cfg_(cfg), m_(Eigen::VectorXd::Zero(num_params)), v_(Eigen::VectorXd::Zero(num_params)) {
  if (!(cfg.lr >= 0.0) || !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0) ||
      !(cfg.eps > 0.0) || !(cfg.weight_decay >= 0.0)) {
    throw InvalidArgument("invalid Adam hyperparameters");
  }
}

void Adam::step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad) {
  require_same_dim(m_.size(), params.size());
  require_same_dim(m_.size(), grad.size());
  const Eigen::VectorXd g = grad + cfg_.weight_decay * params;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * g;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * g.cwiseAbs2();
  ++steps_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  params.array() -= cfg_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
}

nlohmann::ordered_json Adam::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = steps_;
  j["lr"] = cfg_.lr;
  j["beta1"] = cfg_.beta1;
  j["beta2"] = cfg_.beta2;
  j["eps"] = cfg_.eps;
  j["weight_decay"] = cfg_.weight_decay;
  j["m"] = std::vector<double>(m_.data(), m_.data() + m_.size());
  j["v"] = std::vector<double>(v_.data(), v_.data() + v_.size());
  return j;
}

Adam Adam::from_json(const nlohmann::json& j) {
  try {
    AdamConfig cfg{j.at("lr").get<double>(), j.at("beta1").get<double>(), j.at("beta2").get<double>(),
                   j.at("eps").get<double>(), j.at("weight_decay").get<double>()};
    const auto m = j.at("m").get<std::vector<double>>();
    const auto v = j.at("v").get<std::vector<double>>();
    if (m.size() != v.size()) throw InvalidArgument("optimizer moments differ in size");
    Adam a(cfg, static_cast<Index>(m.size()));
    a.m_ = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Index>(m.size()));
    a.v_ = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
    a.steps_ = j.at("step").get<long>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed optimizer state: ") + e.what());
  }
}

namespace {

Index layers_size(const std::vector<DenseLayer>& layers) {
  Index n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

void pack_layers(const std::vector<DenseLayer>& layers, Eigen::VectorXd& out, Index& at) {
  for (const auto& l : layers) {
    out.segment(at, l.w.size()) = Eigen::Map<const Eigen::VectorXd>(l.w.data(), l.w.size());
    at += l.w.size();
    out.segment(at, l.b.size()) = l.b;
    at += l.b.size();
  }
}

}  // namespace

Eigen::VectorXd pack_parameters(const AffineHead& head, const LcboScorer* scorer) {
  const Index n = head.W.size() + head.b.size() + (scorer ? layers_size(scorer->layers()) : 0);
  Eigen::VectorXd out(n);
  Index at = 0;
  pack_layers({{head.W, head.b}}, out, at);
  if (scorer) pack_layers(scorer->layers(), out, at);
  return out;
}

void unpack_parameters(const Eigen::VectorXd& flat, AffineHead& head, LcboScorer* scorer) {
  Index at = 0;
  auto take = [&](Eigen::Ref<Eigen::MatrixXd> dst) {
    if (at + dst.size() > flat.size()) throw InvalidArgument("parameter vector too short");
    Eigen::Map<Eigen::MatrixXd>(dst.data(), dst.rows(), dst.cols()) =
        Eigen::Map<const Eigen::MatrixXd>(flat.data() + at, dst.rows(), dst.cols());
    at += dst.size();
  };
  take(head.W);
  take(head.b);
  if (scorer) {
    for (auto& l : scorer->layers()) {
      take(l.w);
      take(l.b);
    }
  }
  if (at != flat.size()) throw InvalidArgument("parameter vector length mismatch");
}

Eigen::VectorXd pack_gradient(const LossGradient& g) {
  Eigen::VectorXd out(g.W.size() + g.b.size() + layers_size(g.lcbo));
  Index at = 0;
  pack_layers({{g.W, g.b}}, out, at);
  pack_layers(g.lcbo, out, at);
  return out;
}

TrainResult train(const EmbeddingDataset& ds_train, const TrainConfig& cfg, std::optional<AffineHead> init_head,
                  std::optional<LcboScorer> init_scorer) {
  if (cfg.episodes < 0) throw InvalidArgument("episode count must be nonnegative");
  TrainResult res;
  res.head = init_head ? *init_head : AffineHead::identity(ds_train.dim());
  require_same_dim(ds_train.dim(), res.head.dim());
  if (cfg.mode == LossMode::lcbo) {
    res.scorer = init_scorer ? *init_scorer
                             : LcboScorer::random(ds_train.dim(), cfg.seed, cfg.lcbo_hidden, cfg.lcbo_input);
  }
  LossAux aux;
  aux.gamma_oos = cfg.gamma_oos;
  aux.background_constant = cfg.background_constant;
  aux.stop_prototype_gradient = cfg.stop_prototype_gradient;

  LcboScorer* scorer = res.scorer ? &*res.scorer : nullptr;
  Eigen::VectorXd params = pack_parameters(res.head, scorer);
  res.optimizer = Adam(cfg.adam, params.size());
  res.losses.reserve(static_cast<std::size_t>(cfg.episodes));
  for (int e = 0; e < cfg.episodes; ++e) {
    const Episode ep = sample_episode(ds_train, cfg.shape, cfg.seed, static_cast<std::uint64_t>(e));
    aux.scorer = scorer;
    const LossGradient g = grad_episodic_loss(ep, res.head, cfg.mode, aux);
    if (!std::isfinite(g.loss)) {
      throw RuntimeError("non-finite loss at training episode " + std::to_string(e) +
                         " (lr=" + std::to_string(cfg.adam.lr) + "); parameters diverged");
    }
    res.losses.push_back(g.loss);
    res.optimizer.step(params, pack_gradient(g));
    unpack_parameters(params, res.head, scorer);
  }
  return res;
}

nlohmann::ordered_json checkpoint_to_json(const TrainResult& result) {
  auto j = to_json(result.head);
  if (result.scorer) j["lcbo"] = to_json(*result.scorer);
  j["optimizer"] = result.optimizer.to_json();
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint c{head_from_json(j), std::nullopt, std::nullopt};
  if (j.contains("lcbo")) c.scorer = lcbo_from_json(j.at("lcbo"));
  if (j.contains("optimizer")) c.optimizer = Adam::from_json(j.at("optimizer"));
  return c;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeError(path + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

void write_loss_curve(const std::vector<double>& losses, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open " + path + " for writing");
  out << "episode,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out << i << "," << format_double(losses[i]) << "\n";
}

}  // namespace ooskit
