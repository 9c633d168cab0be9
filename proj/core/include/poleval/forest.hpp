#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace poleval {

struct ForestParams {
  std::size_t n_trees = 1000;
  double subsample_fraction = 0.5;  // of clusters (or rows) per tree
  double honesty_fraction = 0.5;    // of each bag used to choose splits
  std::size_t min_leaf = 5;         // minimum estimate-half rows per leaf
  std::size_t max_features = 0;     // candidate features per split; 0 = ceil(sqrt(p))
  std::uint64_t seed = 0;
  bool cluster_subsampling = true;

  void validate() const;  // throws DataError on out-of-range values
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;            // leaf: weighted mean of estimate rows
  std::size_t n_estimation = 0;  // leaf: estimate rows backing the value
  std::size_t n_structure = 0;   // structure rows at this node

  bool is_leaf() const { return feature < 0; }
};

// One honest tree. Row ids refer to input row positions (or, when explicit
// row ids were passed to fit_forest, to positions in id-sorted order).
struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root, children follow DFS
  std::vector<std::size_t> bag;
  std::vector<std::size_t> structure_half;  // disjoint from estimate_half,
  std::vector<std::size_t> estimate_half;   // union equals bag
};

struct ImportanceResult {
  std::vector<double> shares;  // sums to 1, or all zeros when no_splits
  bool no_splits = false;
};

// Honest regression forest with cluster-aware subsampling. Splits are chosen
// on each tree's structure half by CART SSE reduction; leaf values come from
// the estimate half only. Fitting is deterministic given the seed: tree t
// draws from its own derived stream, so thread scheduling cannot change the
// result.
class ForestModel {
 public:
  const std::vector<Tree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  std::size_t n_features() const { return names_.size(); }
  std::size_t n_rows() const { return oob_counts_.size(); }

  // Trees whose bag excludes each training row.
  const std::vector<std::size_t>& oob_counts() const { return oob_counts_; }

  // Mean of per-tree predictions, trees in index order.
  std::vector<double> predict(const Eigen::MatrixXd& X) const;
  std::vector<double> predict_tree(std::size_t tree,
                                   const Eigen::MatrixXd& X) const;

  // Per-training-row prediction averaging only the trees whose bag excludes
  // that row. Throws if any row was in every bag ("increase n_trees").
  std::vector<double> predict_oob() const;

  std::string serialize() const;
  static ForestModel deserialize(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static ForestModel load(const std::filesystem::path& path);

 private:
  friend ForestModel fit_forest(const Eigen::MatrixXd&,
                                const Eigen::VectorXd&,
                                const Eigen::VectorXd&,
                                const std::vector<int>&, const ForestParams&,
                                std::vector<std::string>,
                                std::vector<std::size_t>);

  std::vector<Tree> trees_;
  ForestParams params_;
  std::vector<std::string> names_;
  std::vector<std::size_t> oob_counts_;  // input row order
  std::vector<double> oob_sums_;
};

// X: n x p features; y: outcomes; weights: positive row weights; clusters:
// cluster id per row (whole clusters enter or leave a bag together when
// cluster_subsampling is on). row_ids, when given, are stable per-row labels:
// fitting is invariant to input row permutation as long as ids travel with
// their rows.
ForestModel fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& weights,
                       const std::vector<int>& clusters,
                       const ForestParams& params,
                       std::vector<std::string> feature_names = {},
                       std::vector<std::size_t> row_ids = {});

// Split counts per feature, each split weighted by the structure rows at its
// node, normalized to sum 1. A forest of stumps yields zeros and the
// no_splits flag.
ImportanceResult split_importance(const ForestModel& model);

struct TuneCandidate {
  std::size_t min_leaf = 0;
  std::size_t max_features = 0;
  double oob_mse = 0.0;
};

struct TuneResult {
  ForestParams best;
  double best_oob_mse = 0.0;
  std::vector<TuneCandidate> tried;
};

// Grid search over {min_leaf, max_features} by OOB mean squared error.
TuneResult tune_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& weights,
                       const std::vector<int>& clusters,
                       const ForestParams& base,
                       const std::vector<std::size_t>& min_leaf_grid,
                       const std::vector<std::size_t>& max_features_grid);

}  // namespace poleval
