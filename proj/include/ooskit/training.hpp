#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ooskit/detectors.hpp"
#include "ooskit/episodes.hpp"

namespace ooskit {

enum class LossMode { standard, groos, background, lcbo };

LossMode parse_loss_mode(std::string_view name);
std::string_view loss_mode_name(LossMode m);

struct LossAux {
  std::optional<Point> gamma_oos;             // groos
  std::optional<double> background_constant;  // background
  const LcboScorer* scorer = nullptr;         // lcbo
  bool stop_prototype_gradient = false;
};

struct LossResult {
  double loss = 0.0;
  // Per used query: softmax(-d) over k (+1) slots. In lcbo mode: softmax of
  // the pairwise scores followed by the OOS probability 1 - sigmoid(phi_LC).
  std::vector<Eigen::VectorXd> probabilities;
};

struct LossGradient {
  double loss = 0.0;
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  std::vector<DenseLayer> lcbo;  // empty unless mode == lcbo
};

/// Mean negative log-likelihood over the episode's queries with the OOS
/// queries targeting slot k+1 (groos/background). Standard mode drops OOS
/// queries. Lcbo mode: logistic loss on phi_LC (label in-support) plus
/// cross-entropy over the pairwise scores for in-support queries.
LossResult episodic_loss(const Episode& ep, const AffineHead& head, LossMode mode, const LossAux& aux);

/// Exact gradient of episodic_loss, flowing through the prototypes unless
/// aux.stop_prototype_gradient is set. Distance gradients at d = 0 are taken
/// as zero.
LossGradient grad_episodic_loss(const Episode& ep, const AffineHead& head, LossMode mode, const LossAux& aux);

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-5;  // L2 term added to the gradient
};

class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig cfg, Index num_params);

  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad);

  const AdamConfig& config() const { return cfg_; }
  long steps() const { return steps_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }

  nlohmann::ordered_json to_json() const;
  static Adam from_json(const nlohmann::json& j);

 private:
  AdamConfig cfg_;
  Eigen::VectorXd m_, v_;
  long steps_ = 0;
};

// Flattened parameter vector: W (column-major), b, then each LCBO layer.
Eigen::VectorXd pack_parameters(const AffineHead& head, const LcboScorer* scorer);
void unpack_parameters(const Eigen::VectorXd& flat, AffineHead& head, LcboScorer* scorer);
Eigen::VectorXd pack_gradient(const LossGradient& g);

struct TrainConfig {
  int episodes = 1000;
  EpisodeShape shape;
  LossMode mode = LossMode::groos;
  std::uint64_t seed = 0;
  AdamConfig adam;
  std::optional<Point> gamma_oos;
  std::optional<double> background_constant;
  bool stop_prototype_gradient = false;
  std::vector<Index> lcbo_hidden{64};
  LcboInput lcbo_input = LcboInput::concat;
};

struct TrainResult {
  AffineHead head;
  std::optional<LcboScorer> scorer;
  std::vector<double> losses;  // loss of each episode before its update
  Adam optimizer;
};

/// Episodic Adam training of the affine head (and the LCBO scorer in lcbo
/// mode). Deterministic in cfg.seed. Starts from the identity head unless
/// one is given.
TrainResult train(const EmbeddingDataset& ds_train, const TrainConfig& cfg,
                  std::optional<AffineHead> init_head = std::nullopt,
                  std::optional<LcboScorer> init_scorer = std::nullopt);

/// Head JSON at top level, plus "lcbo" and "optimizer" keys.
nlohmann::ordered_json checkpoint_to_json(const TrainResult& result);

struct Checkpoint {
  AffineHead head;
  std::optional<LcboScorer> scorer;
  std::optional<Adam> optimizer;
};

Checkpoint checkpoint_from_json(const nlohmann::json& j);
Checkpoint load_checkpoint(const std::string& path);

void write_loss_curve(const std::vector<double>& losses, const std::string& path);

}  // namespace ooskit
