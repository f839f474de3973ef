#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pmflow/mlcore.hpp"

namespace pmflow {

enum class OnlineStrategy { Frozen, Boosting, Bagging };

// Appendix hyperparameters for the two batch-incremental update strategies.
struct OnlineBoostingParams {
  int new_trees = 1;
  double learning_rate = 0.01;
  int max_depth = 3;
  double row_subsample = 1.0;
  double col_subsample = 1.0;
  int min_leaf = 1;
};

struct OnlineBaggingParams {
  int new_trees = 70;
  int max_depth = 30;
  double max_features_fraction = 0.2;
  int min_leaf = 1;
};

struct OnlineConfig {
  OnlineStrategy strategy = OnlineStrategy::Frozen;
  int window = 50; // buffer size W
  std::uint64_t seed = 0;
  OnlineBoostingParams boosting;
  OnlineBaggingParams bagging;

  void validate() const;
};

struct UpdateEvent {
  int update_index = 0;      // 1-based
  double rmse_before = 0.0;  // buffer RMSE before/after the model update
  double rmse_after = 0.0;
};

// Fits one tree on the buffer residuals and appends it. The appended tree's
// leaves are scaled by (params.learning_rate / ensemble.learning_rate) so the
// ensemble's single stored rate keeps predicting exactly.
void update_boosting(TreeEnsemble& ensemble, std::span<const TrainingSample> buffer,
                     const OnlineBoostingParams& params, std::uint64_t seed);

// Fits params.new_trees bootstrap trees on the buffer and appends them; the
// aggregation stays a plain mean over all members.
void update_bagging(TreeEnsemble& ensemble, std::span<const TrainingSample> buffer,
                    const OnlineBaggingParams& params, std::uint64_t seed);

// Size-W buffer; flushes (and fires the strategy update) every W samples.
class OnlineLearner {
public:
  explicit OnlineLearner(const OnlineConfig& cfg);

  // Returns an event when a model update fired. Frozen never updates but
  // still flushes the buffer at W (bounded memory).
  std::optional<UpdateEvent> push(const TrainingSample& sample, TreeEnsemble& ensemble);

  const std::vector<TrainingSample>& buffer() const { return buffer_; }
  int updates_fired() const { return updates_; }
  const OnlineConfig& config() const { return cfg_; }

private:
  OnlineConfig cfg_;
  std::vector<TrainingSample> buffer_;
  int updates_ = 0;
};

// Prequential (test-then-learn) replay of an ordered sample stream; returns
// the RMSE of each completed W-sized window. A trailing partial window is
// dropped. The ensemble is updated in place according to cfg.
std::vector<double> stream_replay(std::span<const TrainingSample> stream,
                                  TreeEnsemble& ensemble, const OnlineConfig& cfg);

} // namespace pmflow
