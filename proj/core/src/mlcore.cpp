#include "pmflow/mlcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pmflow/io_util.hpp"
#include "pmflow/parallel.hpp"
#include "pmflow/rng.hpp"

namespace pmflow {

double RegressionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

int RegressionTree::max_depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    if (n.feature >= 0) {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return deepest;
}

double TreeEnsemble::predict_raw(std::span<const double> x) const {
  if (mode == EnsembleMode::Bagging) {
    if (trees.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return sum / static_cast<double>(trees.size());
  }
  double sum = base_value;
  for (const auto& t : trees) sum += learning_rate * t.predict(x);
  return sum;
}

std::vector<double> sample_to_predictors(const TrainingSample& s) {
  std::vector<double> x(kPredictorCount);
  for (int i = 0; i < kFeatureCount; ++i) x[static_cast<std::size_t>(i)] = s.features[i];
  x[kFeatureCount] = s.omega;
  return x;
}

namespace {

struct TreeBuilder {
  std::span<const double> x; // row-major n x kPredictorCount
  std::span<const double> y;
  const TreeFitParams& params;
  Rng rng;
  std::vector<TreeNode> nodes;
  std::vector<int> idx;            // sample indices, partitioned in place
  std::vector<int> scratch_order;  // per-node sort buffer
  std::vector<int> predictors;     // candidate predictors, reused per node

  TreeBuilder(std::span<const double> x_, std::span<const double> y_,
              const TreeFitParams& params_, std::uint64_t seed)
      : x(x_), y(y_), params(params_), rng(seed) {
    idx.resize(y.size());
    std::iota(idx.begin(), idx.end(), 0);
  }

  double value_at(int row, int p) const {
    return x[static_cast<std::size_t>(row) * kPredictorCount + static_cast<std::size_t>(p)];
  }

  // Candidate predictors for one node, ascending so equal-gain ties resolve
  // to the lowest index.
  void pick_predictors() {
    const int m = std::min(
        kPredictorCount,
        static_cast<int>(std::ceil(params.max_features_fraction * kPredictorCount)));
    predictors.resize(kPredictorCount);
    std::iota(predictors.begin(), predictors.end(), 0);
    if (m >= kPredictorCount) return;
    for (int i = 0; i < m; ++i) {
      const auto j = i + static_cast<int>(rng.next_below(
                             static_cast<std::uint64_t>(kPredictorCount - i)));
      std::swap(predictors[static_cast<std::size_t>(i)],
                predictors[static_cast<std::size_t>(j)]);
    }
    predictors.resize(static_cast<std::size_t>(m));
    std::sort(predictors.begin(), predictors.end());
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  Split best_split(int lo, int hi, double sum, double sse) {
    const int n = hi - lo;
    Split best;
    if (sse <= 0.0) return best;
    pick_predictors();
    const double parent_score = sum * sum / n;
    for (int p : predictors) {
      scratch_order.assign(idx.begin() + lo, idx.begin() + hi);
      std::sort(scratch_order.begin(), scratch_order.end(),
                [&](int a, int b) { return value_at(a, p) < value_at(b, p); });
      double sum_left = 0.0;
      for (int i = 1; i < n; ++i) {
        const int row_prev = scratch_order[static_cast<std::size_t>(i - 1)];
        sum_left += y[static_cast<std::size_t>(row_prev)];
        const double v_prev = value_at(row_prev, p);
        const double v = value_at(scratch_order[static_cast<std::size_t>(i)], p);
        if (!(v_prev < v)) continue;
        if (i < params.min_leaf || n - i < params.min_leaf) continue;
        const double sum_right = sum - sum_left;
        const double gain =
            sum_left * sum_left / i + sum_right * sum_right / (n - i) - parent_score;
        if (gain > best.gain) {
          double thr = 0.5 * (v_prev + v);
          if (!(v_prev < thr)) thr = v; // adjacent doubles: keep the partition valid
          best = {p, thr, gain};
        }
      }
    }
    return best;
  }

  int build(int lo, int hi, int depth) {
    const int n = hi - lo;
    double sum = 0.0, sumsq = 0.0;
    for (int i = lo; i < hi; ++i) {
      const double t = y[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      sum += t;
      sumsq += t * t;
    }
    const double mean = sum / n;
    const int node_id = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{.value = mean});

    if (depth >= params.max_depth || n < 2 * params.min_leaf) return node_id;
    const double sse = sumsq - sum * mean;
    const Split s = best_split(lo, hi, sum, sse);
    if (s.feature < 0 || !(s.gain > 0.0)) return node_id;

    const auto mid_it = std::stable_partition(
        idx.begin() + lo, idx.begin() + hi,
        [&](int row) { return value_at(row, s.feature) < s.threshold; });
    const int mid = static_cast<int>(mid_it - idx.begin());
    if (mid == lo || mid == hi) return node_id; // threshold failed to separate

    nodes[static_cast<std::size_t>(node_id)].feature = s.feature;
    nodes[static_cast<std::size_t>(node_id)].threshold = s.threshold;
    nodes[static_cast<std::size_t>(node_id)].gain = s.gain;
    const int left = build(lo, mid, depth + 1);
    nodes[static_cast<std::size_t>(node_id)].left = left;
    const int right = build(mid, hi, depth + 1);
    nodes[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
  }
};

std::vector<double> flatten_predictors(std::span<const TrainingSample> samples) {
  std::vector<double> x;
  x.reserve(samples.size() * kPredictorCount);
  for (const auto& s : samples) {
    for (int i = 0; i < kFeatureCount; ++i) x.push_back(s.features[i]);
    x.push_back(s.omega);
  }
  return x;
}

std::vector<double> targets_of(std::span<const TrainingSample> samples) {
  std::vector<double> y;
  y.reserve(samples.size());
  for (const auto& s : samples) y.push_back(s.inner_iters);
  return y;
}

void validate_fit_params(const TreeFitParams& p) {
  if (p.max_depth < 0 || p.min_leaf < 1 || p.max_features_fraction <= 0.0 ||
      p.max_features_fraction > 1.0)
    throw std::invalid_argument("invalid tree fit parameters");
}

} // namespace

RegressionTree fit_tree_raw(std::span<const double> x, std::span<const double> y,
                            const TreeFitParams& params, std::uint64_t seed) {
  validate_fit_params(params);
  if (y.empty()) throw std::invalid_argument("fit_tree: empty training set");
  if (x.size() != y.size() * kPredictorCount)
    throw std::invalid_argument("fit_tree: predictor matrix shape mismatch");
  TreeBuilder b(x, y, params, seed);
  b.build(0, static_cast<int>(y.size()), 0);
  RegressionTree t;
  t.nodes = std::move(b.nodes);
  return t;
}

RegressionTree fit_tree(std::span<const TrainingSample> samples,
                        const TreeFitParams& params, std::uint64_t seed) {
  const auto x = flatten_predictors(samples);
  const auto y = targets_of(samples);
  return fit_tree_raw(x, y, params, seed);
}

TreeEnsemble fit_forest(std::span<const TrainingSample> samples,
                        const ForestFitParams& params, std::uint64_t seed) {
  validate_fit_params(params.tree);
  if (params.n_trees < 1) throw std::invalid_argument("fit_forest: n_trees < 1");
  if (samples.empty()) throw std::invalid_argument("fit_forest: empty training set");

  const auto x = flatten_predictors(samples);
  const auto y = targets_of(samples);
  const std::size_t n = samples.size();

  TreeEnsemble ens;
  ens.mode = EnsembleMode::Bagging;
  ens.trees.resize(static_cast<std::size_t>(params.n_trees));

  unsigned n_threads = params.n_threads;
  if (n_threads == 0) n_threads = std::thread::hardware_concurrency();

  parallel_for(static_cast<std::size_t>(params.n_trees), n_threads, [&](std::size_t t) {
    Rng rng(Rng::derive(seed, t));
    std::vector<double> xb(n * kPredictorCount);
    std::vector<double> yb(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t row = rng.next_below(n);
      std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(row * kPredictorCount),
                  kPredictorCount,
                  xb.begin() + static_cast<std::ptrdiff_t>(i * kPredictorCount));
      yb[i] = y[row];
    }
    ens.trees[t] = fit_tree_raw(xb, yb, params.tree, rng.next_u64());
  });
  return ens;
}

TreeEnsemble fit_boosted(std::span<const TrainingSample> samples,
                         const BoostFitParams& params, std::uint64_t seed) {
  validate_fit_params(params.tree);
  if (params.n_rounds < 1) throw std::invalid_argument("fit_boosted: n_rounds < 1");
  if (params.learning_rate <= 0.0)
    throw std::invalid_argument("fit_boosted: learning_rate <= 0");
  if (samples.empty()) throw std::invalid_argument("fit_boosted: empty training set");

  const auto x = flatten_predictors(samples);
  const auto y = targets_of(samples);
  const std::size_t n = samples.size();

  TreeEnsemble ens;
  ens.mode = EnsembleMode::Boosted;
  ens.learning_rate = params.learning_rate;
  ens.base_value = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - ens.base_value;

  for (int round = 0; round < params.n_rounds; ++round) {
    RegressionTree t = fit_tree_raw(x, resid, params.tree,
                                    Rng::derive(seed, static_cast<std::uint64_t>(round)));
    for (std::size_t i = 0; i < n; ++i)
      resid[i] -= params.learning_rate *
                  t.predict(std::span<const double>(x).subspan(i * kPredictorCount,
                                                               kPredictorCount));
    ens.trees.push_back(std::move(t));
  }
  return ens;
}

double predict(const TreeEnsemble& ensemble, const FeatureVector& features,
               double omega) {
  std::array<double, kPredictorCount> x;
  for (int i = 0; i < kFeatureCount; ++i) x[static_cast<std::size_t>(i)] = features[i];
  x[kFeatureCount] = omega;
  return ensemble.predict_raw(x);
}

double rmse(const TreeEnsemble& ensemble, std::span<const TrainingSample> samples) {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : samples) {
    const double d = predict(ensemble, s.features, s.omega) - s.inner_iters;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(samples.size()));
}

std::vector<double> feature_importance(const TreeEnsemble& ensemble) {
  std::vector<double> imp(static_cast<std::size_t>(ensemble.predictor_count), 0.0);
  for (const auto& t : ensemble.trees)
    for (const auto& n : t.nodes)
      if (n.feature >= 0) imp[static_cast<std::size_t>(n.feature)] += n.gain;
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0)
    for (auto& v : imp) v /= total;
  return imp;
}

namespace {
constexpr const char* kEnsembleFormat = "pmflow-ensemble";
constexpr int kEnsembleVersion = 1;
} // namespace

std::string serialize_ensemble(const TreeEnsemble& ensemble) {
  nlohmann::ordered_json j;
  j["format"] = kEnsembleFormat;
  j["version"] = kEnsembleVersion;
  j["mode"] = ensemble.mode == EnsembleMode::Bagging ? "bagging" : "boosted";
  j["base_value"] = ensemble.base_value;
  j["learning_rate"] = ensemble.learning_rate;
  j["predictor_count"] = ensemble.predictor_count;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : ensemble.trees) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.gain});
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j.dump(1, '\t') + "\n";
}

void save_ensemble(const TreeEnsemble& ensemble, const std::filesystem::path& path) {
  write_text_file(path, serialize_ensemble(ensemble));
}

TreeEnsemble load_ensemble(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_text_file(path));
  if (j.value("format", "") != kEnsembleFormat)
    throw std::runtime_error("not an ensemble file: " + path.string());
  if (j.value("version", 0) != kEnsembleVersion)
    throw std::runtime_error("unsupported ensemble version in " + path.string());

  TreeEnsemble ens;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "bagging")
    ens.mode = EnsembleMode::Bagging;
  else if (mode == "boosted")
    ens.mode = EnsembleMode::Boosted;
  else
    throw std::runtime_error("unknown ensemble mode: " + mode);
  ens.base_value = j.at("base_value").get<double>();
  ens.learning_rate = j.at("learning_rate").get<double>();
  ens.predictor_count = j.at("predictor_count").get<int>();
  if (ens.predictor_count != kPredictorCount)
    throw std::runtime_error("ensemble predictor count mismatch");

  for (const auto& jt : j.at("trees")) {
    RegressionTree t;
    for (const auto& jn : jt) {
      if (!jn.is_array() || jn.size() != 6)
        throw std::runtime_error("malformed tree node in " + path.string());
      TreeNode n;
      n.feature = jn[0].get<int>();
      n.threshold = jn[1].get<double>();
      n.left = jn[2].get<int>();
      n.right = jn[3].get<int>();
      n.value = jn[4].get<double>();
      n.gain = jn[5].get<double>();
      if (n.feature >= ens.predictor_count)
        throw std::runtime_error("node feature index out of range");
      const int size = static_cast<int>(jt.size());
      if (n.feature >= 0 && (n.left < 0 || n.left >= size || n.right < 0 || n.right >= size))
        throw std::runtime_error("node child index out of range");
      t.nodes.push_back(n);
    }
    if (t.nodes.empty()) throw std::runtime_error("empty tree in " + path.string());
    ens.trees.push_back(std::move(t));
  }
  return ens;
}

} // namespace pmflow
