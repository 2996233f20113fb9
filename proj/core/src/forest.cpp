#include "apbtriage/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "apbtriage/error.hpp"
#include "apbtriage/rng.hpp"
#include "parallel.hpp"

namespace apbtriage::forest {

namespace {

constexpr std::size_t kAnyOffset = kRawFeatureCount;          // 640
constexpr std::size_t kAllOffset = kAnyOffset + 32;           // 672
constexpr std::size_t kPairEqOffset = kAllOffset + 32;        // 704
constexpr std::size_t kPairZerosOffset = kPairEqOffset + 31;  // 735
constexpr std::size_t kPairOnesOffset = kPairZerosOffset + 31;  // 766
constexpr std::size_t kEqAnyIndex = kPairOnesOffset + 31;       // 797
constexpr std::size_t kZerosAnyIndex = kEqAnyIndex + 1;         // 798
constexpr std::size_t kOnesAnyIndex = kZerosAnyIndex + 1;       // 799

unsigned resolve_mtry(const Hyperparams& hp, std::size_t feature_count) {
  unsigned mtry = hp.features_per_split;
  if (mtry == 0)
    mtry = static_cast<unsigned>(std::sqrt(static_cast<double>(feature_count)));
  mtry = std::max(1u, std::min<unsigned>(mtry, static_cast<unsigned>(feature_count)));
  return mtry;
}

struct TrainContext {
  const BitMatrix& x;
  std::span<const std::uint8_t> y;
  std::span<const double> row_weights;
  const Hyperparams& hp;
  unsigned mtry;
};

Tree grow_tree(const TrainContext& ctx, std::uint64_t tree_index) {
  Rng rng = Rng::substream(ctx.hp.base_seed, tree_index);
  const std::size_t n = ctx.x.rows();

  std::vector<std::uint32_t> idx(n);
  for (std::size_t i = 0; i < n; ++i)
    idx[i] = static_cast<std::uint32_t>(rng.below(n));

  std::vector<std::uint32_t> pool(ctx.x.cols());
  std::iota(pool.begin(), pool.end(), 0u);

  Tree tree;
  struct Work {
    std::size_t lo, hi;
    unsigned depth;
    std::size_t node;
  };
  std::vector<Work> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, n, 0, 0});

  while (!stack.empty()) {
    Work w = stack.back();
    stack.pop_back();

    double wn = 0.0, wp = 0.0;
    for (std::size_t i = w.lo; i < w.hi; ++i) {
      std::uint32_t r = idx[i];
      (ctx.y[r] ? wp : wn) += ctx.row_weights[r];
    }
    auto make_leaf = [&] {
      TreeNode& node = tree.nodes[w.node];
      node.feature = -1;
      node.leaf_value = wp / (wn + wp);
    };

    std::size_t count = w.hi - w.lo;
    if (w.depth >= ctx.hp.max_depth || count < ctx.hp.min_samples_split ||
        wn == 0.0 || wp == 0.0) {
      make_leaf();
      continue;
    }

    // fresh candidate subset for this node
    for (unsigned j = 0; j < ctx.mtry; ++j) {
      std::size_t k = j + rng.below(pool.size() - j);
      std::swap(pool[j], pool[k]);
    }
    std::span<const std::uint32_t> candidates(pool.data(), ctx.mtry);
    std::span<const std::uint32_t> rows(idx.data() + w.lo, count);

    std::optional<Split> split = best_split(ctx.x, ctx.y, ctx.row_weights, rows,
                                            candidates, ctx.hp.min_samples_leaf);
    if (!split) {
      make_leaf();
      continue;
    }

    auto mid = std::partition(idx.begin() + w.lo, idx.begin() + w.hi,
                              [&](std::uint32_t r) {
                                return !ctx.x.get(r, static_cast<std::size_t>(split->feature));
                              });
    std::size_t split_at = static_cast<std::size_t>(mid - idx.begin());

    TreeNode& node = tree.nodes[w.node];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = static_cast<std::int32_t>(tree.nodes.size());
    node.right = node.left + 1;
    std::size_t left = static_cast<std::size_t>(node.left);
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    // process left child first for a stable node numbering
    stack.push_back({split_at, w.hi, w.depth + 1, left + 1});
    stack.push_back({w.lo, split_at, w.depth + 1, left});
  }
  return tree;
}

}  // namespace

FeatureVector featurize(const apb::Sample& s, apb::Field field) {
  FeatureVector v(kRawFeatureCount);
  for (std::size_t t = 0; t < apb::kTransactionsPerSample; ++t) {
    std::uint32_t word =
        field == apb::Field::Address ? s.txns[t].address : s.txns[t].data;
    for (unsigned b = 0; b < 32; ++b)
      v[t * 32 + b] = static_cast<std::uint8_t>((word >> b) & 1u);
  }
  return v;
}

FeatureVector expand_features(const FeatureVector& raw) {
  if (raw.size() != kRawFeatureCount)
    throw Error(ErrorCode::WidthMismatch,
                "expected " + std::to_string(kRawFeatureCount) + " raw features, got " +
                    std::to_string(raw.size()));
  FeatureVector v(kExpandedFeatureCount);
  std::copy(raw.begin(), raw.end(), v.begin());

  for (unsigned b = 0; b < 32; ++b) {
    std::uint8_t any = 0, all = 1;
    for (std::size_t t = 0; t < apb::kTransactionsPerSample; ++t) {
      std::uint8_t bit = raw[t * 32 + b];
      any |= bit;
      all &= bit;
    }
    v[kAnyOffset + b] = any;
    v[kAllOffset + b] = all;
  }
  std::uint8_t eq_any = 0, zeros_any = 0, ones_any = 0;
  for (unsigned i = 0; i < 31; ++i) {
    std::uint8_t eq = 1;
    for (std::size_t t = 0; t < apb::kTransactionsPerSample && eq; ++t)
      eq = raw[t * 32 + i + 1] == raw[t * 32 + i];
    std::uint8_t zeros =
        static_cast<std::uint8_t>(!v[kAnyOffset + i] && !v[kAnyOffset + i + 1]);
    std::uint8_t ones =
        static_cast<std::uint8_t>(v[kAllOffset + i] && v[kAllOffset + i + 1]);
    v[kPairEqOffset + i] = eq;
    v[kPairZerosOffset + i] = zeros;
    v[kPairOnesOffset + i] = ones;
    eq_any |= eq;
    zeros_any |= zeros;
    ones_any |= ones;
  }
  v[kEqAnyIndex] = eq_any;
  v[kZerosAnyIndex] = zeros_any;
  v[kOnesAnyIndex] = ones_any;
  return v;
}

std::string_view task_name(Task task) {
  switch (task) {
    case Task::OutOfRange: return "oor";
    case Task::AddressError: return "addr";
    case Task::DataError0: return "d0";
    case Task::DataError1: return "d1";
  }
  return "oor";
}

Task task_from_name(std::string_view name) {
  if (name == "oor") return Task::OutOfRange;
  if (name == "addr") return Task::AddressError;
  if (name == "d0") return Task::DataError0;
  if (name == "d1") return Task::DataError1;
  throw Error(ErrorCode::BadConfig, "unknown task '" + std::string(name) + "'");
}

BitMatrix::BitMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64),
      words_(rows * words_per_row_, 0) {}

BitMatrix BitMatrix::from_rows(const std::vector<FeatureVector>& rows) {
  if (rows.empty()) throw Error(ErrorCode::LengthMismatch, "no rows");
  BitMatrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols_)
      throw Error(ErrorCode::WidthMismatch, "ragged feature rows");
    for (std::size_t c = 0; c < m.cols_; ++c)
      if (rows[r][c]) m.set(r, c, true);
  }
  return m;
}

void BitMatrix::set(std::size_t row, std::size_t col, bool value) {
  std::uint64_t& word = words_[row * words_per_row_ + (col >> 6)];
  std::uint64_t mask = 1ull << (col & 63);
  if (value)
    word |= mask;
  else
    word &= ~mask;
}

double gini(double weight_neg, double weight_pos) {
  double total = weight_neg + weight_pos;
  if (total <= 0.0)
    throw Error(ErrorCode::EmptyPartition, "impurity of an empty partition");
  double p0 = weight_neg / total;
  double p1 = weight_pos / total;
  return 1.0 - p0 * p0 - p1 * p1;
}

std::pair<double, double> balanced_class_weights(std::size_t n_neg, std::size_t n_pos) {
  double n = static_cast<double>(n_neg + n_pos);
  return {n / (2.0 * static_cast<double>(n_neg)),
          n / (2.0 * static_cast<double>(n_pos))};
}

std::optional<Split> best_split(const BitMatrix& x, std::span<const std::uint8_t> y,
                                std::span<const double> row_weights,
                                std::span<const std::uint32_t> rows,
                                std::span<const std::uint32_t> candidates,
                                unsigned min_samples_leaf) {
  double wn = 0.0, wp = 0.0;
  for (std::uint32_t r : rows) (y[r] ? wp : wn) += row_weights[r];
  double parent_weight = wn + wp;
  double parent_impurity = gini(wn, wp);

  std::size_t c_count = candidates.size();
  std::vector<double> wn_right(c_count, 0.0), wp_right(c_count, 0.0);
  std::vector<std::size_t> n_right(c_count, 0);
  for (std::uint32_t r : rows) {
    double w = row_weights[r];
    bool pos = y[r] != 0;
    for (std::size_t c = 0; c < c_count; ++c) {
      if (x.get(r, candidates[c])) {
        ++n_right[c];
        (pos ? wp_right[c] : wn_right[c]) += w;
      }
    }
  }

  std::int32_t best_feature = -1;
  double best_decrease = 0.0;
  for (std::size_t c = 0; c < c_count; ++c) {
    std::size_t nr = n_right[c];
    std::size_t nl = rows.size() - nr;
    if (nr < min_samples_leaf || nl < min_samples_leaf) continue;
    double wnr = wn_right[c], wpr = wp_right[c];
    double wnl = wn - wnr, wpl = wp - wpr;
    double weight_left = wnl + wpl, weight_right = wnr + wpr;
    if (weight_left <= 0.0 || weight_right <= 0.0) continue;
    double children = (weight_left * gini(wnl, wpl) + weight_right * gini(wnr, wpr)) /
                      parent_weight;
    double decrease = parent_impurity - children;
    if (decrease <= 0.0) continue;
    auto f = static_cast<std::int32_t>(candidates[c]);
    if (decrease > best_decrease ||
        (decrease == best_decrease && best_feature >= 0 && f < best_feature)) {
      best_decrease = decrease;
      best_feature = f;
    }
  }
  if (best_feature < 0) return std::nullopt;
  return Split{best_feature, 0.5, best_decrease};
}

Forest train_forest(const std::vector<FeatureVector>& x,
                    const std::vector<std::uint8_t>& y, const Hyperparams& hp,
                    Task task, unsigned jobs) {
  if (x.empty() || x.size() != y.size())
    throw Error(ErrorCode::LengthMismatch,
                "training needs equally many feature rows and labels");
  std::size_t n_pos = 0;
  for (std::uint8_t label : y) n_pos += label ? 1 : 0;
  std::size_t n_neg = y.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw Error(ErrorCode::SingleClassInput, "both classes must be present");
  if (hp.tree_count == 0)
    throw Error(ErrorCode::BadConfig, "tree_count must be positive");

  const std::size_t input_width = x[0].size();
  const bool expand = input_width == kRawFeatureCount;
  BitMatrix matrix = [&] {
    if (!expand) return BitMatrix::from_rows(x);
    std::vector<FeatureVector> expanded;
    expanded.reserve(x.size());
    for (const FeatureVector& row : x) expanded.push_back(expand_features(row));
    return BitMatrix::from_rows(expanded);
  }();

  // class weights come from the full training set, then apply per bootstrap row
  auto [w_neg, w_pos] = hp.balanced_class_weights ? balanced_class_weights(n_neg, n_pos)
                                                  : std::pair<double, double>{1.0, 1.0};
  std::vector<double> row_weights(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) row_weights[i] = y[i] ? w_pos : w_neg;

  TrainContext ctx{matrix, y, row_weights, hp, resolve_mtry(hp, matrix.cols())};

  Forest f;
  f.hyperparams = hp;
  f.task = task;
  f.input_width = static_cast<std::uint32_t>(input_width);
  f.split_width = static_cast<std::uint32_t>(matrix.cols());
  f.trees.resize(hp.tree_count);
  detail::run_partitioned(hp.tree_count, jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) f.trees[t] = grow_tree(ctx, t);
  });
  return f;
}

double predict_proba(const Forest& f, const FeatureVector& x) {
  if (x.size() != f.input_width)
    throw Error(ErrorCode::WidthMismatch,
                "input width " + std::to_string(x.size()) + ", model expects " +
                    std::to_string(f.input_width));
  const FeatureVector* px = &x;
  FeatureVector expanded;
  if (f.split_width != f.input_width) {
    expanded = expand_features(x);
    px = &expanded;
  }
  double sum = 0.0;
  for (const Tree& tree : f.trees) {
    const TreeNode* node = &tree.nodes[0];
    while (node->feature >= 0) {
      double value = (*px)[static_cast<std::size_t>(node->feature)];
      node = &tree.nodes[value <= node->threshold ? node->left : node->right];
    }
    sum += node->leaf_value;
  }
  return sum / static_cast<double>(f.trees.size());
}

}  // namespace apbtriage::forest
