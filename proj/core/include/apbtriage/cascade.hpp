#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "apbtriage/faultgen.hpp"
#include "apbtriage/forest.hpp"

namespace apbtriage::cascade {

// Ordered four-model bundle. Stage order is fixed: out-of-range and address
// models read address features, the data models read data features.
struct CascadeModel {
  forest::Forest oor;
  forest::Forest addr;
  forest::Forest d0;
  forest::Forest d1;

  bool operator==(const CascadeModel&) const = default;
};

// Per-task training sets:
//   oor  : out_of_range_error vs no_error            (address features)
//   addr : address_error vs no_error                 (address features)
//   d0   : data_error_0 vs {no_error, data_error_1}  (data features)
//   d1   : data_error_1 vs {no_error, data_error_0}  (data features)
CascadeModel train_cascade(const faultgen::Dataset& ds,
                           const forest::Hyperparams& hp, unsigned jobs = 1);

// Selects the rows and features for one task; shared with cross-validation.
void task_training_set(const faultgen::Dataset& ds, forest::Task task,
                       std::vector<forest::FeatureVector>& x_out,
                       std::vector<std::uint8_t>& y_out);

apb::Label diagnose(const CascadeModel& m, const apb::Sample& s);

struct DiagnosisTrace {
  apb::Label label = apb::Label::NoError;
  unsigned stages_evaluated = 0;  // prefix length of (oor, addr, d0, d1)
};

DiagnosisTrace diagnose_traced(const CascadeModel& m, const apb::Sample& s);

std::vector<apb::Label> diagnose_batch(const CascadeModel& m,
                                       std::span<const apb::Sample> samples,
                                       unsigned jobs = 1);

std::vector<std::uint8_t> save_cascade(const CascadeModel& m);
CascadeModel load_cascade(std::span<const std::uint8_t> bytes);

}  // namespace apbtriage::cascade
