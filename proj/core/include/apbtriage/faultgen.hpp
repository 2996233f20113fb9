#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "apbtriage/apb.hpp"
#include "apbtriage/rng.hpp"

namespace apbtriage::faultgen {

struct AddressRange {
  std::uint32_t base = 0;
  std::uint32_t last = 0;  // inclusive

  bool operator==(const AddressRange&) const = default;
};

// Valid completer address ranges. The union must leave some of the 32-bit
// space uncovered so that out-of-range addresses exist.
class AddressMap {
 public:
  // Single completer covering the lower half of the address space.
  AddressMap() : AddressMap({{0x0000'0000u, 0x7FFF'FFFFu}}) {}
  explicit AddressMap(std::vector<AddressRange> ranges);

  bool contains(std::uint32_t address) const;
  std::uint64_t valid_count() const { return valid_count_; }
  const std::vector<AddressRange>& ranges() const { return ranges_; }

  std::uint32_t sample_inside(Rng& rng) const;
  std::uint32_t sample_outside(Rng& rng) const;

  bool operator==(const AddressMap&) const = default;

 private:
  std::vector<AddressRange> ranges_;  // sorted, disjoint
  std::uint64_t valid_count_ = 0;
};

struct GenSpec {
  std::array<std::uint64_t, apb::kLabelCount> count_per_label{};  // indexed by Label
  std::uint64_t seed = 42;
  AddressMap address_map{};
  double read_fraction = 0.0;  // probability a clean transaction is a read
  // out-of-range multiplicity policy: k ~ Uniform{1..20} corrupted transactions

  std::uint64_t total_count() const;
};

struct Dataset {
  std::vector<apb::Sample> samples;
  GenSpec spec;  // provenance echo
};

apb::Sample gen_clean_sample(Rng& rng, const AddressMap& map,
                             double read_fraction = 0.0);

// Deterministic fault cores with explicit parameters.
apb::Sample apply_address_bridge(apb::Sample s, unsigned pair_index);
enum class StuckPattern : std::uint8_t { Zeros, Ones };
apb::Sample apply_data_stuck(apb::Sample s, unsigned pair_index, StuckPattern pattern);

// Spec-level injectors drawing their parameters from rng.
apb::Sample inject_out_of_range(apb::Sample s, const AddressMap& map, Rng& rng);
apb::Sample inject_address_short(apb::Sample s, Rng& rng);
// Map-aware variant used by the dataset generator: the bridged sample must
// stay inside the address map (bridging the top pair can set bit 31), or
// cascade stage order would claim it as out-of-range.
apb::Sample inject_address_short(apb::Sample s, Rng& rng, const AddressMap& map);
apb::Sample inject_data_stuck(apb::Sample s, Rng& rng, StuckPattern pattern);

Dataset generate_dataset(const GenSpec& spec, unsigned jobs = 1);

enum class PairPattern : std::uint8_t { Zeros, Ones, EqualMixed };
struct StuckPairFinding {
  unsigned pair_index = 0;  // lowest adjacent pair whose bits agree everywhere
  PairPattern pattern = PairPattern::EqualMixed;

  bool operator==(const StuckPairFinding&) const = default;
};

// Rule-based baseline: scans the 31 adjacent bit pairs of the chosen field
// across all 20 transactions; none when no pair is constant-equal.
std::optional<StuckPairFinding> stuck_pair_oracle(const apb::Sample& s,
                                                  apb::Field field);

// JSON-Lines dataset: header line with format version and spec echo,
// then one sample per line.
void write_dataset(const Dataset& ds, std::ostream& out);
Dataset read_dataset(std::istream& in);

}  // namespace apbtriage::faultgen
