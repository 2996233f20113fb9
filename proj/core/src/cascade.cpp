#include "apbtriage/cascade.hpp"

#include "apbtriage/error.hpp"
#include "binio.hpp"
#include "parallel.hpp"

namespace apbtriage::cascade {

namespace {

constexpr std::string_view kBundleMagic = "APBC";
constexpr std::uint32_t kBundleFormatVersion = 1;

struct TaskSpec {
  forest::Task task;
  apb::Field field;
  apb::Label positive;
  std::array<apb::Label, 2> negatives;
  unsigned negative_count;
};

constexpr std::array<TaskSpec, 4> kTaskSpecs = {{
    {forest::Task::OutOfRange, apb::Field::Address, apb::Label::OutOfRange,
     {apb::Label::NoError, apb::Label::NoError}, 1},
    {forest::Task::AddressError, apb::Field::Address, apb::Label::AddressError,
     {apb::Label::NoError, apb::Label::NoError}, 1},
    {forest::Task::DataError0, apb::Field::Data, apb::Label::DataError0,
     {apb::Label::NoError, apb::Label::DataError1}, 2},
    {forest::Task::DataError1, apb::Field::Data, apb::Label::DataError1,
     {apb::Label::NoError, apb::Label::DataError0}, 2},
}};

const TaskSpec& task_spec(forest::Task task) {
  return kTaskSpecs[static_cast<std::size_t>(task)];
}

}  // namespace

void task_training_set(const faultgen::Dataset& ds, forest::Task task,
                       std::vector<forest::FeatureVector>& x_out,
                       std::vector<std::uint8_t>& y_out) {
  const TaskSpec& spec = task_spec(task);
  x_out.clear();
  y_out.clear();
  bool saw_positive = false;
  bool saw_negative = false;
  for (const apb::Sample& s : ds.samples) {
    if (!s.label)
      throw Error(ErrorCode::UnknownLabel, "unlabeled sample in training dataset");
    bool positive = *s.label == spec.positive;
    bool negative = false;
    for (unsigned i = 0; i < spec.negative_count && !negative; ++i)
      negative = *s.label == spec.negatives[i];
    if (!positive && !negative) continue;
    x_out.push_back(forest::featurize(s, spec.field));
    y_out.push_back(positive ? 1 : 0);
    saw_positive |= positive;
    saw_negative |= negative;
  }
  if (!saw_positive)
    throw Error(ErrorCode::MissingClass,
                std::string("stage ") + std::string(forest::task_name(task)) +
                    " needs label " + std::string(apb::label_name(spec.positive)));
  if (!saw_negative)
    throw Error(ErrorCode::MissingClass,
                std::string("stage ") + std::string(forest::task_name(task)) +
                    " has no negative samples");
}

CascadeModel train_cascade(const faultgen::Dataset& ds,
                           const forest::Hyperparams& hp, unsigned jobs) {
  CascadeModel m;
  std::vector<forest::FeatureVector> x;
  std::vector<std::uint8_t> y;
  for (const TaskSpec& spec : kTaskSpecs) {
    task_training_set(ds, spec.task, x, y);
    forest::Forest trained = forest::train_forest(x, y, hp, spec.task, jobs);
    switch (spec.task) {
      case forest::Task::OutOfRange: m.oor = std::move(trained); break;
      case forest::Task::AddressError: m.addr = std::move(trained); break;
      case forest::Task::DataError0: m.d0 = std::move(trained); break;
      case forest::Task::DataError1: m.d1 = std::move(trained); break;
    }
  }
  return m;
}

DiagnosisTrace diagnose_traced(const CascadeModel& m, const apb::Sample& s) {
  forest::FeatureVector address = forest::featurize(s, apb::Field::Address);
  if (forest::predict(m.oor, address))
    return {apb::Label::OutOfRange, 1};
  if (forest::predict(m.addr, address))
    return {apb::Label::AddressError, 2};
  forest::FeatureVector data = forest::featurize(s, apb::Field::Data);
  if (forest::predict(m.d0, data))
    return {apb::Label::DataError0, 3};
  if (forest::predict(m.d1, data))
    return {apb::Label::DataError1, 4};
  return {apb::Label::NoError, 4};
}

apb::Label diagnose(const CascadeModel& m, const apb::Sample& s) {
  return diagnose_traced(m, s).label;
}

std::vector<apb::Label> diagnose_batch(const CascadeModel& m,
                                       std::span<const apb::Sample> samples,
                                       unsigned jobs) {
  std::vector<apb::Label> out(samples.size());
  detail::run_partitioned(samples.size(), jobs,
                          [&](std::size_t begin, std::size_t end) {
                            for (std::size_t i = begin; i < end; ++i)
                              out[i] = diagnose(m, samples[i]);
                          });
  return out;
}

std::vector<std::uint8_t> save_cascade(const CascadeModel& m) {
  detail::ByteWriter w;
  w.magic(kBundleMagic);
  w.u32(kBundleFormatVersion);
  const forest::Forest* slots[4] = {&m.oor, &m.addr, &m.d0, &m.d1};
  for (const forest::Forest* f : slots) {
    std::vector<std::uint8_t> blob = forest::save_forest(*f);
    w.u32(static_cast<std::uint32_t>(blob.size()));
    w.bytes(blob);
  }
  w.append_crc();
  return w.take();
}

CascadeModel load_cascade(std::span<const std::uint8_t> bytes) {
  detail::ByteReader head(bytes);
  if (!head.expect_magic(kBundleMagic))
    throw Error(ErrorCode::CorruptModel, "not a cascade bundle file");
  std::uint32_t version = head.u32();
  if (version != kBundleFormatVersion)
    throw Error(ErrorCode::VersionMismatch,
                "cascade format version " + std::to_string(version) + ", expected " +
                    std::to_string(kBundleFormatVersion));

  detail::ByteReader r(detail::checked_payload(bytes, "cascade bundle"));
  r.expect_magic(kBundleMagic);
  r.u32();  // version, already checked

  CascadeModel m;
  forest::Forest* slots[4] = {&m.oor, &m.addr, &m.d0, &m.d1};
  constexpr forest::Task expected[4] = {
      forest::Task::OutOfRange, forest::Task::AddressError,
      forest::Task::DataError0, forest::Task::DataError1};
  for (int i = 0; i < 4; ++i) {
    if (r.remaining() < 4)
      throw Error(ErrorCode::CorruptModel,
                  std::string("bundle missing the ") +
                      std::string(forest::task_name(expected[i])) + " slot");
    std::uint32_t size = r.u32();
    *slots[i] = forest::load_forest(r.take(size));
    if (slots[i]->task != expected[i])
      throw Error(ErrorCode::CorruptModel,
                  std::string("slot ") + std::string(forest::task_name(expected[i])) +
                      " holds a " + std::string(forest::task_name(slots[i]->task)) +
                      " model");
  }
  if (r.remaining() != 0)
    throw Error(ErrorCode::CorruptModel, "trailing bytes in cascade bundle");
  return m;
}

}  // namespace apbtriage::cascade
