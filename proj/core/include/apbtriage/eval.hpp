#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apbtriage/faultgen.hpp"
#include "apbtriage/forest.hpp"

namespace apbtriage::eval {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> classes);

  const std::vector<std::string>& classes() const { return classes_; }
  std::uint64_t count(std::size_t true_class, std::size_t predicted_class) const;
  void add(std::size_t true_class, std::size_t predicted_class);

  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t true_class) const;       // class support
  std::uint64_t col_sum(std::size_t predicted_class) const;  // predictions
  double accuracy() const;                                   // trace / total

 private:
  std::vector<std::string> classes_;
  std::vector<std::uint64_t> counts_;  // row-major classes x classes
};

ConfusionMatrix confusion_matrix(std::span<const std::string> truth,
                                 std::span<const std::string> predictions,
                                 std::vector<std::string> classes);

struct ClassMetrics {
  double precision_pct = 0.0;
  double recall_pct = 0.0;
  double f1_pct = 0.0;
  std::uint64_t true_positives = 0;
  bool zero_division = false;  // some denominator was 0; metric reported as 0
};

struct MetricsReport {
  std::vector<std::string> classes;
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;  // fraction in [0, 1]
};

MetricsReport prf_metrics(const ConfusionMatrix& cm);

// Mann-Whitney rank AUC with average ranks for ties. labels: 1 = positive.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Fold id per sample; stratified per class and shuffled by seed.
std::vector<std::uint32_t> stratified_folds(std::span<const apb::Label> labels,
                                            unsigned k, std::uint64_t seed);

struct CvResult {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over folds
  std::vector<double> fold_accuracy;
};

CvResult kfold_cv(const faultgen::Dataset& ds, unsigned k, forest::Task task,
                  const forest::Hyperparams& hp, std::uint64_t seed,
                  unsigned jobs = 1);

// Matches the reporting style "0.9940 ± 0.0034".
std::string format_mean_std(const CvResult& cv);

}  // namespace apbtriage::eval
