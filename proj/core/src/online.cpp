#include "pmflow/online.hpp"

#include <cmath>
#include <stdexcept>

#include "pmflow/rng.hpp"

namespace pmflow {

void OnlineConfig::validate() const {
  if (window < 1) throw std::invalid_argument("online window must be >= 1");
  if (boosting.new_trees < 1 || boosting.learning_rate <= 0.0 ||
      boosting.max_depth < 0 || boosting.min_leaf < 1 ||
      boosting.row_subsample <= 0.0 || boosting.row_subsample > 1.0 ||
      boosting.col_subsample <= 0.0 || boosting.col_subsample > 1.0)
    throw std::invalid_argument("invalid online boosting parameters");
  if (bagging.new_trees < 1 || bagging.max_depth < 0 || bagging.min_leaf < 1 ||
      bagging.max_features_fraction <= 0.0 || bagging.max_features_fraction > 1.0)
    throw std::invalid_argument("invalid online bagging parameters");
}

void update_boosting(TreeEnsemble& ensemble, std::span<const TrainingSample> buffer,
                     const OnlineBoostingParams& params, std::uint64_t seed) {
  if (ensemble.mode != EnsembleMode::Boosted)
    throw std::invalid_argument("boosting update requires a boosted ensemble");
  if (ensemble.learning_rate <= 0.0)
    throw std::invalid_argument("boosted ensemble has no learning rate");
  if (buffer.empty()) return;

  const TreeFitParams tree_params{.max_depth = params.max_depth,
                                  .min_leaf = params.min_leaf,
                                  .max_features_fraction = params.col_subsample};
  Rng rng(seed);

  for (int t = 0; t < params.new_trees; ++t) {
    std::vector<const TrainingSample*> rows;
    rows.reserve(buffer.size());
    for (const auto& s : buffer) rows.push_back(&s);
    if (params.row_subsample < 1.0) {
      const auto keep = static_cast<std::size_t>(
          std::ceil(params.row_subsample * static_cast<double>(rows.size())));
      for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t j = i + rng.next_below(rows.size() - i);
        std::swap(rows[i], rows[j]);
      }
      rows.resize(std::max<std::size_t>(keep, 1));
    }

    std::vector<double> x;
    x.reserve(rows.size() * kPredictorCount);
    std::vector<double> resid;
    resid.reserve(rows.size());
    for (const TrainingSample* s : rows) {
      const auto p = sample_to_predictors(*s);
      resid.push_back(s->inner_iters - ensemble.predict_raw(p));
      x.insert(x.end(), p.begin(), p.end());
    }

    RegressionTree tree = fit_tree_raw(x, resid, tree_params, rng.next_u64());
    // The ensemble applies its own stored rate to every member, so bake the
    // online rate into the new leaves.
    const double scale = params.learning_rate / ensemble.learning_rate;
    for (auto& n : tree.nodes)
      if (n.feature < 0) n.value *= scale;
    ensemble.trees.push_back(std::move(tree));
  }
}

void update_bagging(TreeEnsemble& ensemble, std::span<const TrainingSample> buffer,
                    const OnlineBaggingParams& params, std::uint64_t seed) {
  if (ensemble.mode != EnsembleMode::Bagging)
    throw std::invalid_argument("bagging update requires a bagging ensemble");
  if (buffer.empty()) return;

  const TreeFitParams tree_params{.max_depth = params.max_depth,
                                  .min_leaf = params.min_leaf,
                                  .max_features_fraction = params.max_features_fraction};
  const std::size_t n = buffer.size();

  for (int t = 0; t < params.new_trees; ++t) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
    std::vector<double> x;
    x.reserve(n * kPredictorCount);
    std::vector<double> y;
    y.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = buffer[rng.next_below(n)];
      const auto p = sample_to_predictors(s);
      x.insert(x.end(), p.begin(), p.end());
      y.push_back(s.inner_iters);
    }
    ensemble.trees.push_back(fit_tree_raw(x, y, tree_params, rng.next_u64()));
  }
}

OnlineLearner::OnlineLearner(const OnlineConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  buffer_.reserve(static_cast<std::size_t>(cfg_.window));
}

std::optional<UpdateEvent> OnlineLearner::push(const TrainingSample& sample,
                                               TreeEnsemble& ensemble) {
  buffer_.push_back(sample);
  if (buffer_.size() < static_cast<std::size_t>(cfg_.window)) return std::nullopt;

  std::optional<UpdateEvent> event;
  if (cfg_.strategy != OnlineStrategy::Frozen) {
    UpdateEvent e;
    e.rmse_before = rmse(ensemble, buffer_);
    const std::uint64_t update_seed =
        Rng::derive(cfg_.seed, static_cast<std::uint64_t>(updates_));
    if (cfg_.strategy == OnlineStrategy::Boosting)
      update_boosting(ensemble, buffer_, cfg_.boosting, update_seed);
    else
      update_bagging(ensemble, buffer_, cfg_.bagging, update_seed);
    e.rmse_after = rmse(ensemble, buffer_);
    e.update_index = ++updates_;
    event = e;
  }
  buffer_.clear();
  return event;
}

std::vector<double> stream_replay(std::span<const TrainingSample> stream,
                                  TreeEnsemble& ensemble, const OnlineConfig& cfg) {
  OnlineLearner learner(cfg);
  std::vector<double> window_rmse;
  double acc = 0.0;
  std::size_t in_window = 0;
  for (const auto& s : stream) {
    const double err = predict(ensemble, s.features, s.omega) - s.inner_iters;
    acc += err * err;
    ++in_window;
    learner.push(s, ensemble);
    if (in_window == static_cast<std::size_t>(cfg.window)) {
      window_rmse.push_back(std::sqrt(acc / static_cast<double>(in_window)));
      acc = 0.0;
      in_window = 0;
    }
  }
  return window_rmse;
}

} // namespace pmflow
