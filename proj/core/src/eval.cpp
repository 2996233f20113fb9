#include "apbtriage/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "apbtriage/error.hpp"
#include "apbtriage/rng.hpp"

namespace apbtriage::eval {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {
  if (classes_.empty())
    throw Error(ErrorCode::BadConfig, "confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::count(std::size_t true_class,
                                     std::size_t predicted_class) const {
  return counts_[true_class * classes_.size() + predicted_class];
}

void ConfusionMatrix::add(std::size_t true_class, std::size_t predicted_class) {
  ++counts_[true_class * classes_.size() + predicted_class];
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t true_class) const {
  std::uint64_t sum = 0;
  for (std::size_t j = 0; j < classes_.size(); ++j) sum += count(true_class, j);
  return sum;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted_class) const {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < classes_.size(); ++i) sum += count(i, predicted_class);
  return sum;
}

double ConfusionMatrix::accuracy() const {
  std::uint64_t diag = 0;
  for (std::size_t i = 0; i < classes_.size(); ++i) diag += count(i, i);
  std::uint64_t all = total();
  return all == 0 ? 0.0 : static_cast<double>(diag) / static_cast<double>(all);
}

ConfusionMatrix confusion_matrix(std::span<const std::string> truth,
                                 std::span<const std::string> predictions,
                                 std::vector<std::string> classes) {
  if (truth.size() != predictions.size())
    throw Error(ErrorCode::LengthMismatch,
                "truth and prediction lists differ in length");
  ConfusionMatrix cm(std::move(classes));
  auto index_of = [&](const std::string& name) {
    const auto& cls = cm.classes();
    auto it = std::find(cls.begin(), cls.end(), name);
    if (it == cls.end())
      throw Error(ErrorCode::UnknownLabel, "label '" + name + "' not in class list");
    return static_cast<std::size_t>(it - cls.begin());
  };
  for (std::size_t i = 0; i < truth.size(); ++i)
    cm.add(index_of(truth[i]), index_of(predictions[i]));
  return cm;
}

MetricsReport prf_metrics(const ConfusionMatrix& cm) {
  MetricsReport report;
  report.classes = cm.classes();
  report.accuracy = cm.accuracy();
  for (std::size_t c = 0; c < cm.classes().size(); ++c) {
    ClassMetrics m;
    m.true_positives = cm.count(c, c);
    std::uint64_t predicted = cm.col_sum(c);
    std::uint64_t support = cm.row_sum(c);
    double tp = static_cast<double>(m.true_positives);
    double precision = 0.0, recall = 0.0;
    if (predicted == 0 || support == 0) m.zero_division = true;
    if (predicted > 0) precision = tp / static_cast<double>(predicted);
    if (support > 0) recall = tp / static_cast<double>(support);
    double f1 = 0.0;
    if (precision + recall > 0.0)
      f1 = 2.0 * precision * recall / (precision + recall);
    m.precision_pct = 100.0 * precision;
    m.recall_pct = 100.0 * recall;
    m.f1_pct = 100.0 * f1;
    report.per_class.push_back(m);
  }
  return report;
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  std::size_t n_pos = 0;
  for (std::uint8_t l : labels) n_pos += l ? 1 : 0;
  std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw Error(ErrorCode::SingleClassInput, "AUC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average ranks over tie groups (1-based)
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) rank_sum_pos += avg_rank;
    i = j;
  }
  double np = static_cast<double>(n_pos);
  double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<std::uint32_t> stratified_folds(std::span<const apb::Label> labels,
                                            unsigned k, std::uint64_t seed) {
  if (k < 2)
    throw Error(ErrorCode::BadConfig, "cross-validation needs k >= 2");
  std::vector<std::uint32_t> fold(labels.size(), 0);
  for (std::size_t cls = 0; cls < apb::kLabelCount; ++cls) {
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (static_cast<std::size_t>(labels[i]) == cls)
        members.push_back(static_cast<std::uint32_t>(i));
    if (members.empty()) continue;
    if (members.size() < k)
      throw Error(ErrorCode::TooFewSamples,
                  "class " + std::string(apb::label_name(static_cast<apb::Label>(cls))) +
                      " has " + std::to_string(members.size()) + " samples, needs >= " +
                      std::to_string(k));
    Rng rng = Rng::substream(seed, cls);
    for (std::size_t i = members.size(); i-- > 1;)
      std::swap(members[i], members[rng.below(i + 1)]);
    for (std::size_t pos = 0; pos < members.size(); ++pos)
      fold[members[pos]] = static_cast<std::uint32_t>(pos % k);
  }
  return fold;
}

CvResult kfold_cv(const faultgen::Dataset& ds, unsigned k, forest::Task task,
                  const forest::Hyperparams& hp, std::uint64_t seed, unsigned jobs) {
  apb::Field field = (task == forest::Task::OutOfRange ||
                      task == forest::Task::AddressError)
                         ? apb::Field::Address
                         : apb::Field::Data;
  apb::Label positive = apb::Label::NoError;
  switch (task) {
    case forest::Task::OutOfRange: positive = apb::Label::OutOfRange; break;
    case forest::Task::AddressError: positive = apb::Label::AddressError; break;
    case forest::Task::DataError0: positive = apb::Label::DataError0; break;
    case forest::Task::DataError1: positive = apb::Label::DataError1; break;
  }

  // select the task's rows, keeping fine labels for stratification
  std::vector<const apb::Sample*> selected;
  for (const apb::Sample& s : ds.samples) {
    if (!s.label)
      throw Error(ErrorCode::UnknownLabel, "unlabeled sample in dataset");
    bool keep = false;
    switch (task) {
      case forest::Task::OutOfRange:
        keep = *s.label == apb::Label::OutOfRange || *s.label == apb::Label::NoError;
        break;
      case forest::Task::AddressError:
        keep = *s.label == apb::Label::AddressError || *s.label == apb::Label::NoError;
        break;
      case forest::Task::DataError0:
      case forest::Task::DataError1:
        keep = *s.label == apb::Label::DataError0 ||
               *s.label == apb::Label::DataError1 || *s.label == apb::Label::NoError;
        break;
    }
    if (keep) selected.push_back(&s);
  }

  std::vector<apb::Label> fine_labels;
  fine_labels.reserve(selected.size());
  for (const apb::Sample* s : selected) fine_labels.push_back(*s->label);

  std::size_t n_pos = 0;
  for (apb::Label l : fine_labels) n_pos += l == positive ? 1 : 0;
  if (n_pos == 0 || n_pos == fine_labels.size())
    throw Error(ErrorCode::MissingClass,
                std::string("task ") + std::string(forest::task_name(task)) +
                    " needs both positive and negative samples");

  std::vector<std::uint32_t> fold = stratified_folds(fine_labels, k, seed);

  std::vector<forest::FeatureVector> features;
  features.reserve(selected.size());
  std::vector<std::uint8_t> y(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    features.push_back(forest::featurize(*selected[i], field));
    y[i] = *selected[i]->label == positive ? 1 : 0;
  }

  CvResult result;
  for (unsigned f = 0; f < k; ++f) {
    std::vector<forest::FeatureVector> x_train;
    std::vector<std::uint8_t> y_train;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (fold[i] != f) {
        x_train.push_back(features[i]);
        y_train.push_back(y[i]);
      }
    }
    forest::Forest model = forest::train_forest(x_train, y_train, hp, task, jobs);
    std::uint64_t correct = 0, seen = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (fold[i] != f) continue;
      ++seen;
      bool fired = forest::predict(model, features[i]);
      if (fired == (y[i] != 0)) ++correct;
    }
    result.fold_accuracy.push_back(
        seen == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(seen));
  }

  double sum = std::accumulate(result.fold_accuracy.begin(),
                               result.fold_accuracy.end(), 0.0);
  result.mean = sum / static_cast<double>(k);
  double sq = 0.0;
  for (double a : result.fold_accuracy) sq += (a - result.mean) * (a - result.mean);
  result.stddev = k > 1 ? std::sqrt(sq / static_cast<double>(k - 1)) : 0.0;
  return result;
}

std::string format_mean_std(const CvResult& cv) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", cv.mean, cv.stddev);
  return buf;
}

}  // namespace apbtriage::eval
