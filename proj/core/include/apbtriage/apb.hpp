#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apbtriage/vcd.hpp"

namespace apbtriage::apb {

inline constexpr std::size_t kTransactionsPerSample = 20;

enum class Label : std::uint8_t {
  NoError,
  OutOfRange,
  AddressError,
  DataError0,
  DataError1,
};
inline constexpr std::size_t kLabelCount = 5;

std::string_view label_name(Label label);
// data_error_0/1 collapse to "data_error"; reporting only, never training.
std::string_view merged_label_name(Label label);
Label label_from_name(std::string_view name);

enum class Field : std::uint8_t { Address, Data };

// Role bindings; each value is a VCD id code or hierarchical name.
// PREADY is optional: empty means zero wait states are assumed.
struct SignalMap {
  std::string psel;
  std::string penable;
  std::string pwrite;
  std::string paddr;
  std::string pwdata;
  std::string prdata;
  std::string pready;
};

SignalMap default_signal_map();
SignalMap signal_map_from_json(std::string_view json_text);
std::string signal_map_to_json(const SignalMap& map);

struct Transaction {
  std::uint32_t address = 0;
  std::uint32_t data = 0;
  bool is_write = true;
  std::uint64_t time = 0;  // completion of the access phase

  bool operator==(const Transaction&) const = default;
};

struct Sample {
  std::array<Transaction, kTransactionsPerSample> txns{};
  std::optional<Label> label;

  bool operator==(const Sample&) const = default;
};

// One transaction per access phase: PENABLE rising 0->1 with PSEL high,
// completing when PREADY is high (immediately if PREADY is unmapped).
std::vector<Transaction> extract_transactions(const vcd::Document& doc,
                                              const SignalMap& map);

struct Grouping {
  std::vector<Sample> samples;
  std::size_t remainder = 0;  // trailing transactions short of a window
};

// Consecutive non-overlapping windows of 20, in time order.
Grouping group_samples(std::span<const Transaction> txns);

// Inverse of extraction: two-phase waveform with setup at txn.time - period
// and access/completion at txn.time. Times must be on or beyond that grid.
vcd::Document synth_waveform(std::span<const Transaction> txns,
                             const SignalMap& map, std::uint64_t period);

}  // namespace apbtriage::apb
