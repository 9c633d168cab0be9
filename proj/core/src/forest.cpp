#include "poleval/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "poleval/errors.hpp"
#include "poleval/rng.hpp"

namespace poleval {

namespace {

std::string hexfloat(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double route(const std::vector<TreeNode>& nodes, const Eigen::MatrixXd& X,
             Eigen::Index row) {
  int k = 0;
  while (!nodes[static_cast<std::size_t>(k)].is_leaf()) {
    const TreeNode& nd = nodes[static_cast<std::size_t>(k)];
    k = X(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(k)].value;
}

struct GrowContext {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const Eigen::VectorXd& w;
  std::size_t p;
  std::size_t mtry;
  std::size_t min_leaf;
};

struct WorkItem {
  int node = 0;
  std::vector<std::size_t> s_rows;  // structure rows at this node
  std::vector<std::size_t> e_rows;  // estimate rows routed here
};

void grow_tree(Tree& tree, const GrowContext& ctx, SplitMix64& rng) {
  tree.nodes.clear();
  tree.nodes.emplace_back();
  std::vector<WorkItem> stack;
  stack.push_back({0, tree.structure_half, tree.estimate_half});

  std::vector<std::pair<double, std::size_t>> vals_s;
  std::vector<double> vals_e;

  while (!stack.empty()) {
    WorkItem item = std::move(stack.back());
    stack.pop_back();
    const auto& s_rows = item.s_rows;
    const auto& e_rows = item.e_rows;

    double sw = 0.0, swy = 0.0, swy2 = 0.0;
    for (const std::size_t r : s_rows) {
      const double wi = ctx.w(static_cast<Eigen::Index>(r));
      const double yi = ctx.y(static_cast<Eigen::Index>(r));
      sw += wi;
      swy += wi * yi;
      swy2 += wi * yi * yi;
    }
    const double node_sse = s_rows.empty() ? 0.0 : swy2 - swy * swy / sw;

    auto make_leaf = [&] {
      TreeNode& nd = tree.nodes[static_cast<std::size_t>(item.node)];
      nd.feature = -1;
      nd.n_structure = s_rows.size();
      double ew = 0.0, ewy = 0.0;
      for (const std::size_t r : e_rows) {
        const double wi = ctx.w(static_cast<Eigen::Index>(r));
        ew += wi;
        ewy += wi * ctx.y(static_cast<Eigen::Index>(r));
      }
      nd.value = ewy / ew;
      nd.n_estimation = e_rows.size();
    };

    if (s_rows.size() < 2 || e_rows.size() < 2 * ctx.min_leaf ||
        node_sse <= 1e-12 * std::max(1.0, swy2)) {
      make_leaf();
      continue;
    }

    // Candidate features, evaluated in ascending index order so SSE ties
    // resolve to the lowest feature, then the lowest threshold.
    std::vector<std::size_t> features =
        rng.sample_without_replacement(ctx.p, ctx.mtry);
    std::sort(features.begin(), features.end());

    double best_sse = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;

    for (const std::size_t j : features) {
      const auto col = static_cast<Eigen::Index>(j);
      vals_s.clear();
      vals_s.reserve(s_rows.size());
      for (const std::size_t r : s_rows) {
        vals_s.emplace_back(ctx.X(static_cast<Eigen::Index>(r), col), r);
      }
      std::sort(vals_s.begin(), vals_s.end());
      if (vals_s.front().first == vals_s.back().first) continue;

      vals_e.clear();
      vals_e.reserve(e_rows.size());
      for (const std::size_t r : e_rows) {
        vals_e.push_back(ctx.X(static_cast<Eigen::Index>(r), col));
      }
      std::sort(vals_e.begin(), vals_e.end());

      double lsw = 0.0, lswy = 0.0, lswy2 = 0.0;
      std::size_t ep = 0;
      for (std::size_t i = 0; i + 1 < vals_s.size(); ++i) {
        const std::size_t r = vals_s[i].second;
        const double wi = ctx.w(static_cast<Eigen::Index>(r));
        const double yi = ctx.y(static_cast<Eigen::Index>(r));
        lsw += wi;
        lswy += wi * yi;
        lswy2 += wi * yi * yi;
        const double a = vals_s[i].first;
        const double b = vals_s[i + 1].first;
        if (b <= a) continue;
        const double thr = a + (b - a) / 2.0;
        while (ep < vals_e.size() && vals_e[ep] <= thr) ++ep;
        if (ep < ctx.min_leaf || vals_e.size() - ep < ctx.min_leaf) continue;
        const double rsw = sw - lsw;
        if (lsw <= 0.0 || rsw <= 0.0) continue;
        const double left_sse = lswy2 - lswy * lswy / lsw;
        const double right_sse =
            (swy2 - lswy2) - (swy - lswy) * (swy - lswy) / rsw;
        const double child_sse = left_sse + right_sse;
        if (child_sse < best_sse) {
          best_sse = child_sse;
          best_feature = static_cast<int>(j);
          best_threshold = thr;
        }
      }
    }

    if (best_feature < 0 || best_sse >= node_sse) {
      make_leaf();
      continue;
    }

    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    {
      TreeNode& nd = tree.nodes[static_cast<std::size_t>(item.node)];
      nd.feature = best_feature;
      nd.threshold = best_threshold;
      nd.left = left;
      nd.right = right;
      nd.n_structure = s_rows.size();
    }

    WorkItem li, ri;
    li.node = left;
    ri.node = right;
    const auto fcol = static_cast<Eigen::Index>(best_feature);
    for (const std::size_t r : s_rows) {
      (ctx.X(static_cast<Eigen::Index>(r), fcol) <= best_threshold ? li : ri)
          .s_rows.push_back(r);
    }
    for (const std::size_t r : e_rows) {
      (ctx.X(static_cast<Eigen::Index>(r), fcol) <= best_threshold ? li : ri)
          .e_rows.push_back(r);
    }
    stack.push_back(std::move(ri));
    stack.push_back(std::move(li));
  }
}

}  // namespace

void ForestParams::validate() const {
  if (n_trees < 1) throw DataError("forest: n_trees must be >= 1");
  if (!(subsample_fraction > 0.0 && subsample_fraction < 1.0)) {
    throw DataError("forest: subsample_fraction must be in (0,1)");
  }
  if (!(honesty_fraction > 0.0 && honesty_fraction < 1.0)) {
    throw DataError("forest: honesty_fraction must be in (0,1)");
  }
  if (min_leaf < 1) throw DataError("forest: min_leaf must be >= 1");
}

ForestModel fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& weights,
                       const std::vector<int>& clusters,
                       const ForestParams& params,
                       std::vector<std::string> feature_names,
                       std::vector<std::size_t> row_ids) {
  params.validate();
  const std::size_t n = static_cast<std::size_t>(X.rows());
  const std::size_t p = static_cast<std::size_t>(X.cols());
  if (n == 0 || p == 0) throw DataError("forest: empty design matrix");
  if (static_cast<std::size_t>(y.size()) != n ||
      static_cast<std::size_t>(weights.size()) != n || clusters.size() != n) {
    throw DataError("forest: input lengths differ");
  }
  if (n < 2 * params.min_leaf) {
    throw DataError("forest: need n >= 2*min_leaf (n=" + std::to_string(n) +
                    ", min_leaf=" + std::to_string(params.min_leaf) + ")");
  }
  if (!X.allFinite() || !y.allFinite() || !weights.allFinite()) {
    throw DataError("forest: inputs contain non-finite values");
  }
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) <= 0.0) {
      throw DataError("forest: weights must be positive (row " +
                      std::to_string(i) + ")");
    }
  }
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < p; ++j) {
      feature_names.push_back("f" + std::to_string(j));
    }
  } else if (feature_names.size() != p) {
    throw DataError("forest: feature_names length does not match columns");
  }

  // Canonical order: rows sorted by their stable id. With default ids this
  // is the input order; with caller ids it makes the fit invariant to input
  // row permutation.
  std::vector<std::size_t> to_input(n);
  if (row_ids.empty()) {
    std::iota(to_input.begin(), to_input.end(), std::size_t{0});
  } else {
    if (row_ids.size() != n) {
      throw DataError("forest: row_ids length does not match rows");
    }
    std::iota(to_input.begin(), to_input.end(), std::size_t{0});
    std::sort(to_input.begin(), to_input.end(),
              [&](std::size_t a, std::size_t b) {
                return row_ids[a] < row_ids[b];
              });
    for (std::size_t c = 0; c + 1 < n; ++c) {
      if (row_ids[to_input[c]] == row_ids[to_input[c + 1]]) {
        throw DataError("forest: row_ids must be unique");
      }
    }
  }

  Eigen::MatrixXd Xc(X.rows(), X.cols());
  Eigen::VectorXd yc(y.size()), wc(weights.size());
  for (std::size_t c = 0; c < n; ++c) {
    const auto src = static_cast<Eigen::Index>(to_input[c]);
    const auto dst = static_cast<Eigen::Index>(c);
    Xc.row(dst) = X.row(src);
    yc(dst) = y(src);
    wc(dst) = weights(src);
  }

  // Dense cluster labels in canonical first-appearance order.
  std::vector<int> cluster_c(n);
  std::vector<std::vector<std::size_t>> members;
  {
    std::vector<std::pair<int, int>> relabel;  // (original, dense)
    for (std::size_t c = 0; c < n; ++c) {
      const int orig = clusters[to_input[c]];
      int dense = -1;
      for (const auto& [o, d] : relabel) {
        if (o == orig) {
          dense = d;
          break;
        }
      }
      if (dense < 0) {
        dense = static_cast<int>(members.size());
        relabel.emplace_back(orig, dense);
        members.emplace_back();
      }
      cluster_c[c] = dense;
      members[static_cast<std::size_t>(dense)].push_back(c);
    }
  }
  const std::size_t n_clusters = members.size();

  const std::size_t mtry =
      params.max_features == 0
          ? static_cast<std::size_t>(
                std::ceil(std::sqrt(static_cast<double>(p))))
          : std::min(params.max_features, p);

  ForestModel model;
  model.params_ = params;
  model.names_ = std::move(feature_names);
  model.trees_.resize(params.n_trees);

  const GrowContext ctx{Xc, yc, wc, p, mtry, params.min_leaf};
  std::string first_error;

#pragma omp parallel for schedule(dynamic)
  for (long long tt = 0; tt < static_cast<long long>(params.n_trees); ++tt) {
    const auto t = static_cast<std::size_t>(tt);
    try {
      SplitMix64 rng(derive_stream_seed(params.seed, t));
      Tree& tree = model.trees_[t];

      if (params.cluster_subsampling) {
        const std::size_t m = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(
                   params.subsample_fraction *
                   static_cast<double>(n_clusters))));
        auto drawn = rng.sample_without_replacement(n_clusters, m);
        std::sort(drawn.begin(), drawn.end());
        for (const std::size_t k : drawn) {
          tree.bag.insert(tree.bag.end(), members[k].begin(),
                          members[k].end());
        }
      } else {
        const std::size_t m = std::min(
            n, std::max<std::size_t>(
                   2, static_cast<std::size_t>(std::floor(
                          params.subsample_fraction *
                          static_cast<double>(n)))));
        tree.bag = rng.sample_without_replacement(n, m);
      }
      std::sort(tree.bag.begin(), tree.bag.end());
      if (tree.bag.size() < 2) {
        throw DataError("forest: tree bag has fewer than 2 rows; increase "
                        "subsample_fraction or cluster sizes");
      }

      std::vector<std::size_t> shuffled = tree.bag;
      rng.shuffle(shuffled);
      const std::size_t n_struct = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::floor(
              params.honesty_fraction * static_cast<double>(shuffled.size()))),
          1, shuffled.size() - 1);
      tree.structure_half.assign(shuffled.begin(),
                                 shuffled.begin() +
                                     static_cast<std::ptrdiff_t>(n_struct));
      tree.estimate_half.assign(shuffled.begin() +
                                    static_cast<std::ptrdiff_t>(n_struct),
                                shuffled.end());
      std::sort(tree.structure_half.begin(), tree.structure_half.end());
      std::sort(tree.estimate_half.begin(), tree.estimate_half.end());

      grow_tree(tree, ctx, rng);
    } catch (const std::exception& e) {
#pragma omp critical
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty()) throw DataError(first_error);

  // OOB sums in canonical space, trees visited in index order per row so the
  // result is independent of scheduling.
  std::vector<std::uint8_t> inbag(params.n_trees * n, 0);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    for (const std::size_t r : model.trees_[t].bag) {
      inbag[t * n + r] = 1;
    }
  }
  model.oob_sums_.assign(n, 0.0);
  model.oob_counts_.assign(n, 0);
  std::vector<double> sums_c(n, 0.0);
  std::vector<std::size_t> counts_c(n, 0);
#pragma omp parallel for schedule(static)
  for (long long cc = 0; cc < static_cast<long long>(n); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t t = 0; t < params.n_trees; ++t) {
      if (!inbag[t * n + c]) {
        sum += route(model.trees_[t].nodes, Xc, static_cast<Eigen::Index>(c));
        ++cnt;
      }
    }
    sums_c[c] = sum;
    counts_c[c] = cnt;
  }
  for (std::size_t c = 0; c < n; ++c) {
    model.oob_sums_[to_input[c]] = sums_c[c];
    model.oob_counts_[to_input[c]] = counts_c[c];
  }
  return model;
}

std::vector<double> ForestModel::predict(const Eigen::MatrixXd& X) const {
  if (static_cast<std::size_t>(X.cols()) != n_features()) {
    throw DataError("forest predict: expected " +
                    std::to_string(n_features()) + " features, got " +
                    std::to_string(X.cols()));
  }
  if (!X.allFinite()) {
    throw DataError("forest predict: non-finite feature values");
  }
  const Eigen::Index m = X.rows();
  std::vector<double> out(static_cast<std::size_t>(m), 0.0);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(m); ++i) {
    double sum = 0.0;
    for (const auto& tree : trees_) {
      sum += route(tree.nodes, X, static_cast<Eigen::Index>(i));
    }
    out[static_cast<std::size_t>(i)] =
        sum / static_cast<double>(trees_.size());
  }
  return out;
}

std::vector<double> ForestModel::predict_tree(std::size_t tree,
                                              const Eigen::MatrixXd& X) const {
  if (tree >= trees_.size()) throw DataError("forest: tree index out of range");
  if (static_cast<std::size_t>(X.cols()) != n_features()) {
    throw DataError("forest predict: feature count mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(X.rows()), 0.0);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = route(trees_[tree].nodes, X, i);
  }
  return out;
}

std::vector<double> ForestModel::predict_oob() const {
  std::string starved;
  int listed = 0;
  for (std::size_t i = 0; i < oob_counts_.size(); ++i) {
    if (oob_counts_[i] == 0 && listed < 10) {
      starved += (listed ? ", " : "") + std::to_string(i);
      ++listed;
    }
  }
  if (listed > 0) {
    throw DataError("forest: rows " + starved +
                    " appear in every tree bag, no out-of-bag prediction "
                    "possible; increase n_trees");
  }
  std::vector<double> out(oob_counts_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = oob_sums_[i] / static_cast<double>(oob_counts_[i]);
  }
  return out;
}

ImportanceResult split_importance(const ForestModel& model) {
  ImportanceResult out;
  out.shares.assign(model.n_features(), 0.0);
  double total = 0.0;
  for (const auto& tree : model.trees()) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) {
        const double weight = static_cast<double>(node.n_structure);
        out.shares[static_cast<std::size_t>(node.feature)] += weight;
        total += weight;
      }
    }
  }
  if (total == 0.0) {
    out.no_splits = true;
    return out;
  }
  for (double& s : out.shares) s /= total;
  return out;
}

std::string ForestModel::serialize() const {
  std::ostringstream os;
  os << "poleval_forest 1\n";
  os << "features " << names_.size() << '\n';
  for (const auto& name : names_) os << "name " << name << '\n';
  os << "params " << params_.n_trees << ' '
     << hexfloat(params_.subsample_fraction) << ' '
     << hexfloat(params_.honesty_fraction) << ' ' << params_.min_leaf << ' '
     << params_.max_features << ' ' << params_.seed << ' '
     << (params_.cluster_subsampling ? 1 : 0) << '\n';
  os << "rows " << oob_counts_.size() << '\n';
  for (std::size_t i = 0; i < oob_counts_.size(); ++i) {
    os << "oob " << oob_counts_[i] << ' ' << hexfloat(oob_sums_[i]) << '\n';
  }
  os << "trees " << trees_.size() << '\n';
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const Tree& tree = trees_[t];
    os << "tree " << t << '\n';
    auto write_ids = [&os](const char* tag,
                           const std::vector<std::size_t>& ids) {
      os << tag << ' ' << ids.size();
      for (const std::size_t r : ids) os << ' ' << r;
      os << '\n';
    };
    write_ids("bag", tree.bag);
    write_ids("structure", tree.structure_half);
    write_ids("estimate", tree.estimate_half);
    os << "nodes " << tree.nodes.size() << '\n';
    for (const auto& nd : tree.nodes) {
      if (nd.is_leaf()) {
        os << "l " << hexfloat(nd.value) << ' ' << nd.n_estimation << ' '
           << nd.n_structure << '\n';
      } else {
        os << "s " << nd.feature << ' ' << hexfloat(nd.threshold) << ' '
           << nd.left << ' ' << nd.right << ' ' << nd.n_structure << '\n';
      }
    }
  }
  os << "end\n";
  return os.str();
}

namespace {

class TokenReader {
 public:
  explicit TokenReader(const std::string& text) : in_(text) {}

  std::string next() {
    std::string tok;
    if (!(in_ >> tok)) throw IoError("forest parse: unexpected end of input");
    return tok;
  }
  void expect(const std::string& want) {
    const std::string got = next();
    if (got != want) {
      throw IoError("forest parse: expected '" + want + "', got '" + got +
                    "'");
    }
  }
  std::uint64_t next_uint() {
    const std::string tok = next();
    try {
      return std::stoull(tok);
    } catch (const std::exception&) {
      throw IoError("forest parse: expected integer, got '" + tok + "'");
    }
  }
  long long next_int() {
    const std::string tok = next();
    try {
      return std::stoll(tok);
    } catch (const std::exception&) {
      throw IoError("forest parse: expected integer, got '" + tok + "'");
    }
  }
  double next_double() {
    const std::string tok = next();
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) {
      throw IoError("forest parse: expected number, got '" + tok + "'");
    }
    return v;
  }

 private:
  std::istringstream in_;
};

}  // namespace

ForestModel ForestModel::deserialize(const std::string& text) {
  TokenReader r(text);
  r.expect("poleval_forest");
  const auto version = r.next_uint();
  if (version != 1) {
    throw IoError("forest parse: unsupported version " +
                  std::to_string(version));
  }
  ForestModel model;
  r.expect("features");
  const auto p = r.next_uint();
  for (std::uint64_t j = 0; j < p; ++j) {
    r.expect("name");
    model.names_.push_back(r.next());
  }
  r.expect("params");
  model.params_.n_trees = r.next_uint();
  model.params_.subsample_fraction = r.next_double();
  model.params_.honesty_fraction = r.next_double();
  model.params_.min_leaf = r.next_uint();
  model.params_.max_features = r.next_uint();
  model.params_.seed = r.next_uint();
  model.params_.cluster_subsampling = r.next_uint() != 0;
  r.expect("rows");
  const auto n = r.next_uint();
  model.oob_counts_.resize(n);
  model.oob_sums_.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    r.expect("oob");
    model.oob_counts_[i] = r.next_uint();
    model.oob_sums_[i] = r.next_double();
  }
  r.expect("trees");
  const auto n_trees = r.next_uint();
  model.trees_.resize(n_trees);
  for (std::uint64_t t = 0; t < n_trees; ++t) {
    r.expect("tree");
    if (r.next_uint() != t) throw IoError("forest parse: tree index mismatch");
    Tree& tree = model.trees_[t];
    auto read_ids = [&r](const char* tag, std::vector<std::size_t>& ids) {
      r.expect(tag);
      const auto k = r.next_uint();
      ids.resize(k);
      for (std::uint64_t i = 0; i < k; ++i) {
        ids[i] = static_cast<std::size_t>(r.next_uint());
      }
    };
    read_ids("bag", tree.bag);
    read_ids("structure", tree.structure_half);
    read_ids("estimate", tree.estimate_half);
    r.expect("nodes");
    const auto m = r.next_uint();
    tree.nodes.resize(m);
    for (std::uint64_t k = 0; k < m; ++k) {
      TreeNode& nd = tree.nodes[k];
      const std::string kind = r.next();
      if (kind == "s") {
        nd.feature = static_cast<int>(r.next_int());
        nd.threshold = r.next_double();
        nd.left = static_cast<int>(r.next_int());
        nd.right = static_cast<int>(r.next_int());
        nd.n_structure = static_cast<std::size_t>(r.next_uint());
      } else if (kind == "l") {
        nd.feature = -1;
        nd.value = r.next_double();
        nd.n_estimation = static_cast<std::size_t>(r.next_uint());
        nd.n_structure = static_cast<std::size_t>(r.next_uint());
      } else {
        throw IoError("forest parse: unknown node kind '" + kind + "'");
      }
    }
  }
  r.expect("end");
  return model;
}

void ForestModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write forest file: " + path.string());
  out << serialize();
  if (!out) throw IoError("write failed: " + path.string());
}

ForestModel ForestModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open forest file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

TuneResult tune_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& weights,
                       const std::vector<int>& clusters,
                       const ForestParams& base,
                       const std::vector<std::size_t>& min_leaf_grid,
                       const std::vector<std::size_t>& max_features_grid) {
  if (min_leaf_grid.empty() || max_features_grid.empty()) {
    throw DataError("tune_forest: empty grid");
  }
  TuneResult result;
  result.best_oob_mse = std::numeric_limits<double>::infinity();
  for (const std::size_t ml : min_leaf_grid) {
    for (const std::size_t mf : max_features_grid) {
      ForestParams params = base;
      params.min_leaf = ml;
      params.max_features = mf;
      const ForestModel model =
          fit_forest(X, y, weights, clusters, params);
      const std::vector<double> oob = model.predict_oob();
      double mse = 0.0;
      for (std::size_t i = 0; i < oob.size(); ++i) {
        const double d = oob[i] - y(static_cast<Eigen::Index>(i));
        mse += d * d;
      }
      mse /= static_cast<double>(oob.size());
      result.tried.push_back({ml, mf, mse});
      if (mse < result.best_oob_mse) {
        result.best_oob_mse = mse;
        result.best = params;
      }
    }
  }
  return result;
}

}  // namespace poleval
