#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace apbtriage::vcd {

// Four-state logic. Every signal is X until its first recorded change.
enum class FourState : std::uint8_t { Zero, One, X, Z };

char to_char(FourState s);

struct Timescale {
  unsigned magnitude = 1;
  std::string unit = "ns";

  bool operator==(const Timescale&) const = default;
};

struct VarDecl {
  std::string id_code;
  unsigned width = 1;
  std::string reference;  // hierarchical name, scopes joined with '.'
  std::string var_kind = "wire";

  bool operator==(const VarDecl&) const = default;
};

struct ValueChange {
  std::uint64_t time = 0;
  std::string id_code;
  std::vector<FourState> value;  // MSB first, length equals declared width

  bool operator==(const ValueChange&) const = default;
};

// Immutable waveform document. Construction validates the invariants
// (unique ids, declared ids only, full-width values, non-decreasing time),
// so emit() never has to.
class Document {
 public:
  Document() = default;
  Document(Timescale timescale, std::vector<VarDecl> vars,
           std::vector<ValueChange> changes);

  const Timescale& timescale() const { return timescale_; }
  const std::vector<VarDecl>& vars() const { return vars_; }
  const std::vector<ValueChange>& changes() const { return changes_; }

  // Lookup by id code first, then by hierarchical reference.
  const VarDecl* find_var(std::string_view id_or_reference) const;

  // Value held at `time`: the most recent change at or before it,
  // or all-X if the signal has not changed yet.
  std::vector<FourState> value_at(std::string_view id_code, std::uint64_t time) const;

  bool operator==(const Document& other) const;

 private:
  Timescale timescale_;
  std::vector<VarDecl> vars_;
  std::vector<ValueChange> changes_;
  std::unordered_map<std::string, std::size_t> var_index_;
  // per id: indices into changes_, time-ordered
  std::unordered_map<std::string, std::vector<std::size_t>> change_index_;
};

Document parse(std::string_view text);
std::string emit(const Document& doc);

// Helpers for 32-bit bus payloads.
std::vector<FourState> word_to_bits(std::uint32_t word, unsigned width);
bool bits_have_unknown(const std::vector<FourState>& bits);
std::uint32_t bits_to_word(const std::vector<FourState>& bits);

}  // namespace apbtriage::vcd
