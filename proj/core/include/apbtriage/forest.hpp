#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "apbtriage/apb.hpp"

namespace apbtriage::forest {

// Raw featurization of a sample: feature[t*32 + b] = bit b (LSB first) of
// transaction t's chosen field.
inline constexpr std::size_t kRawFeatureCount = apb::kTransactionsPerSample * 32;

using FeatureVector = std::vector<std::uint8_t>;  // values in {0, 1}

FeatureVector featurize(const apb::Sample& s, apb::Field field);

// Derived constancy summaries appended to width-640 inputs before training:
// per bit column any/all over the 20 transactions, per adjacent pair
// always-equal / always-00 / always-11, and the unions of the pair flags.
// Bridging and stuck faults are column-constancy signatures, which bare bit
// splits cannot assemble within the depth budget.
inline constexpr std::size_t kSummaryFeatureCount = 32 + 32 + 3 * 31 + 3;
inline constexpr std::size_t kExpandedFeatureCount =
    kRawFeatureCount + kSummaryFeatureCount;

FeatureVector expand_features(const FeatureVector& raw);

struct Hyperparams {
  unsigned tree_count = 200;
  unsigned max_depth = 15;
  unsigned min_samples_split = 5;
  unsigned min_samples_leaf = 2;
  unsigned features_per_split = 0;  // 0 = floor(sqrt(feature count))
  bool balanced_class_weights = true;
  std::uint64_t base_seed = 42;

  bool operator==(const Hyperparams&) const = default;
};

enum class Task : std::uint8_t { OutOfRange, AddressError, DataError0, DataError1 };
std::string_view task_name(Task task);
Task task_from_name(std::string_view name);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.5;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double leaf_value = 0.0;  // weighted positive fraction

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0

  bool operator==(const Tree&) const = default;
};

struct Forest {
  std::vector<Tree> trees;
  Hyperparams hyperparams;
  Task task = Task::OutOfRange;
  double decision_threshold = 0.5;
  std::uint32_t input_width = 0;  // accepted FeatureVector length
  std::uint32_t split_width = 0;  // feature count the trees index into

  bool operator==(const Forest&) const = default;
};

// Row-major packed binary matrix; the training working set.
class BitMatrix {
 public:
  BitMatrix(std::size_t rows, std::size_t cols);
  static BitMatrix from_rows(const std::vector<FeatureVector>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  void set(std::size_t row, std::size_t col, bool value);
  bool get(std::size_t row, std::size_t col) const {
    return (words_[row * words_per_row_ + (col >> 6)] >> (col & 63)) & 1u;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t words_per_row_;
  std::vector<std::uint64_t> words_;
};

// Gini impurity of a weighted two-class partition.
double gini(double weight_neg, double weight_pos);

// Balanced class weights on the full training set: w_c = n / (2 * n_c).
std::pair<double, double> balanced_class_weights(std::size_t n_neg, std::size_t n_pos);

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.5;
  double decrease = 0.0;  // weighted Gini decrease
};

// Best split over the candidate features only. Binary columns make 0.5 the
// only useful threshold. Children smaller than min_samples_leaf are
// ineligible; none when no eligible split has positive decrease. Ties go to
// the lowest feature index.
std::optional<Split> best_split(const BitMatrix& x, std::span<const std::uint8_t> y,
                                std::span<const double> row_weights,
                                std::span<const std::uint32_t> rows,
                                std::span<const std::uint32_t> candidates,
                                unsigned min_samples_leaf);

Forest train_forest(const std::vector<FeatureVector>& x,
                    const std::vector<std::uint8_t>& y, const Hyperparams& hp,
                    Task task = Task::OutOfRange, unsigned jobs = 1);

double predict_proba(const Forest& f, const FeatureVector& x);
inline bool predict(const Forest& f, const FeatureVector& x) {
  return predict_proba(f, x) >= f.decision_threshold;
}

std::vector<std::uint8_t> save_forest(const Forest& f);
Forest load_forest(std::span<const std::uint8_t> bytes);

}  // namespace apbtriage::forest
