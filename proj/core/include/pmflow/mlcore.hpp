#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pmflow/features.hpp"

namespace pmflow {

// Predictors seen by the trees: the 17 features plus omega at index 17.
inline constexpr int kPredictorCount = kFeatureCount + 1;

struct TrainingSample {
  FeatureVector features;
  double omega = 1.0;      // relaxation used in the recorded iteration
  double inner_iters = 1;  // regression target
};

struct TreeNode {
  int feature = -1; // -1: leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0; // leaf prediction
  double gain = 0.0;  // SSE reduction of the split (importance bookkeeping)
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  int max_depth() const;
};

enum class EnsembleMode { Bagging, Boosted };

struct TreeEnsemble {
  EnsembleMode mode = EnsembleMode::Bagging;
  std::vector<RegressionTree> trees;
  double base_value = 0.0;    // Boosted only
  double learning_rate = 0.0; // Boosted only
  int predictor_count = kPredictorCount;

  double predict_raw(std::span<const double> x) const;
};

struct TreeFitParams {
  int max_depth = 16;
  int min_leaf = 5;
  double max_features_fraction = 1.0; // ceil(fraction * 18) predictors per node
};

// CART regression tree, greedy SSE-reduction splits at midpoint thresholds.
// Deterministic for a given seed. Targets/predictors are taken from the
// samples as [features..., omega] -> inner_iters.
RegressionTree fit_tree(std::span<const TrainingSample> samples,
                        const TreeFitParams& params, std::uint64_t seed);

// Raw-matrix variant used by boosting residual fits and the online updates.
// x is row-major n x kPredictorCount.
RegressionTree fit_tree_raw(std::span<const double> x, std::span<const double> y,
                            const TreeFitParams& params, std::uint64_t seed);

double predict(const TreeEnsemble& ensemble, const FeatureVector& features,
               double omega);

struct ForestFitParams {
  int n_trees = 100;
  // Per-node predictor subsetting keeps any single dominant predictor from
  // crowding out the rest, which the omega argmin depends on.
  TreeFitParams tree{.max_depth = 16, .min_leaf = 5, .max_features_fraction = 0.2};
  unsigned n_threads = 0; // 0: hardware concurrency
};

TreeEnsemble fit_forest(std::span<const TrainingSample> samples,
                        const ForestFitParams& params, std::uint64_t seed);

struct BoostFitParams {
  int n_rounds = 200;
  double learning_rate = 0.1;
  TreeFitParams tree{.max_depth = 6, .min_leaf = 5, .max_features_fraction = 1.0};
};

TreeEnsemble fit_boosted(std::span<const TrainingSample> samples,
                         const BoostFitParams& params, std::uint64_t seed);

double rmse(const TreeEnsemble& ensemble, std::span<const TrainingSample> samples);

// Total split-gain per predictor over all trees, normalized to sum 1.
// All-leaf ensembles yield all zeros.
std::vector<double> feature_importance(const TreeEnsemble& ensemble);

void save_ensemble(const TreeEnsemble& ensemble, const std::filesystem::path& path);
TreeEnsemble load_ensemble(const std::filesystem::path& path);

// Serialized form (identical to the file content); used for byte-level
// determinism checks and prefix-stability assertions.
std::string serialize_ensemble(const TreeEnsemble& ensemble);

std::vector<double> sample_to_predictors(const TrainingSample& s);

} // namespace pmflow
