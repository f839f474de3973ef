#include "pmflow/controller.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace pmflow {

FixedOmegaController::FixedOmegaController(double omega) : omega_(omega) {
  if (!(omega > 0.0) || omega > 1.0)
    throw std::invalid_argument("fixed omega must be in (0, 1]");
}

std::string FixedOmegaController::name() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fixed-%.2f", omega_);
  return buf;
}

CflDynamicController::CflDynamicController(double a, double omega_min)
    : a_(a), omega_min_(omega_min) {
  if (a < 0.0) throw std::invalid_argument("cfl controller: a must be >= 0");
  if (!(omega_min > 0.0) || omega_min > 1.0)
    throw std::invalid_argument("cfl controller: omega_min must be in (0, 1]");
}

double CflDynamicController::select_omega(const FeatureVector& features) {
  const double omega = 1.0 / (1.0 + a_ * features[kMaxShockFrontCfl]);
  return std::clamp(omega, omega_min_, 1.0);
}

std::vector<double> default_omega_grid() {
  std::vector<double> grid;
  grid.reserve(19);
  for (int i = 10; i <= 100; i += 5) grid.push_back(i / 100.0);
  return grid;
}

MlSurrogateController::MlSurrogateController(TreeEnsemble ensemble,
                                             std::optional<OnlineConfig> online,
                                             std::vector<double> grid)
    : ensemble_(std::move(ensemble)), grid_(std::move(grid)), online_(std::move(online)) {
  if (grid_.empty()) throw std::invalid_argument("omega grid is empty");
  std::sort(grid_.begin(), grid_.end());
  for (double w : grid_)
    if (!(w > 0.0) || w > 1.0)
      throw std::invalid_argument("omega grid values must be in (0, 1]");
  if (online_) {
    online_->validate();
    learner_ = std::make_unique<OnlineLearner>(*online_);
  }
}

double MlSurrogateController::select_omega(const FeatureVector& features) {
  double best_omega = grid_.back();
  double best_pred = 0.0;
  bool first = true;
  for (double w : grid_) {
    const double pred = predict(ensemble_, features, w);
    // <= so exact ties land on the largest omega of the ascending grid.
    if (first || pred <= best_pred) {
      best_pred = pred;
      best_omega = w;
      first = false;
    }
  }
  return best_omega;
}

std::optional<UpdateEvent> MlSurrogateController::report_outcome(
    const FeatureVector& features, double omega_used, int inner_iters) {
  if (!learner_) return std::nullopt;
  TrainingSample s;
  s.features = features;
  s.omega = omega_used;
  s.inner_iters = inner_iters;
  return learner_->push(s, ensemble_);
}

std::string MlSurrogateController::name() const {
  if (!online_ || online_->strategy == OnlineStrategy::Frozen) return "ml-frozen";
  return online_->strategy == OnlineStrategy::Boosting ? "ml-boosting" : "ml-bagging";
}

double total_iteration_metric(std::span<const IterationRecord> records) {
  double inner = 0.0;
  for (const auto& r : records) inner += r.inner;
  return static_cast<double>(records.size()) + inner / 3.0;
}

} // namespace pmflow
