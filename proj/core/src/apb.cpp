#include "apbtriage/apb.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "apbtriage/error.hpp"

namespace apbtriage::apb {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kLabelCount> kLabelNames = {
    "no_error", "out_of_range_error", "address_error", "data_error_0",
    "data_error_1"};

// tri-state view of a 1-bit control signal
enum class Bit : std::uint8_t { Low, High, Unknown };

Bit to_bit(const std::vector<vcd::FourState>& bits) {
  if (bits.size() != 1) return Bit::Unknown;
  switch (bits[0]) {
    case vcd::FourState::Zero: return Bit::Low;
    case vcd::FourState::One: return Bit::High;
    default: return Bit::Unknown;
  }
}

struct ResolvedSignals {
  std::string psel, penable, pwrite, paddr, pwdata, prdata, pready;
  bool has_pready = false;
};

std::string resolve_one(const vcd::Document& doc, std::string_view binding,
                        std::string_view role, unsigned want_width) {
  if (binding.empty())
    throw Error(ErrorCode::MissingSignal, std::string(role) + " is not mapped");
  const vcd::VarDecl* var = doc.find_var(binding);
  if (!var)
    throw Error(ErrorCode::MissingSignal,
                std::string(role) + " -> '" + std::string(binding) +
                    "' matches no declared signal");
  if (var->width != want_width)
    throw Error(ErrorCode::MissingSignal,
                std::string(role) + " -> '" + var->reference + "' has width " +
                    std::to_string(var->width) + ", expected " +
                    std::to_string(want_width));
  return var->id_code;
}

ResolvedSignals resolve(const vcd::Document& doc, const SignalMap& map) {
  ResolvedSignals r;
  r.psel = resolve_one(doc, map.psel, "PSEL", 1);
  r.penable = resolve_one(doc, map.penable, "PENABLE", 1);
  r.pwrite = resolve_one(doc, map.pwrite, "PWRITE", 1);
  r.paddr = resolve_one(doc, map.paddr, "PADDR", 32);
  r.pwdata = resolve_one(doc, map.pwdata, "PWDATA", 32);
  r.prdata = resolve_one(doc, map.prdata, "PRDATA", 32);
  if (!map.pready.empty()) {
    r.pready = resolve_one(doc, map.pready, "PREADY", 1);
    r.has_pready = true;
  }
  return r;
}

struct Snapshot {
  std::uint64_t time = 0;
  Bit psel = Bit::Unknown;
  Bit penable = Bit::Unknown;
  Bit pwrite = Bit::Unknown;
  Bit pready = Bit::Unknown;
  std::vector<vcd::FourState> paddr;
  std::vector<vcd::FourState> pwdata;
  std::vector<vcd::FourState> prdata;
};

std::uint32_t sampled_word(const std::vector<vcd::FourState>& bits,
                           std::string_view role, std::uint64_t time) {
  if (bits.empty() || vcd::bits_have_unknown(bits))
    throw Error(ErrorCode::XInPayload,
                std::string(role) + " carries x/z at t=" + std::to_string(time));
  return vcd::bits_to_word(bits);
}

}  // namespace

std::string_view label_name(Label label) {
  return kLabelNames[static_cast<std::size_t>(label)];
}

std::string_view merged_label_name(Label label) {
  if (label == Label::DataError0 || label == Label::DataError1) return "data_error";
  return label_name(label);
}

Label label_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i)
    if (kLabelNames[i] == name) return static_cast<Label>(i);
  throw Error(ErrorCode::UnknownLabel, "unknown label '" + std::string(name) + "'");
}

SignalMap default_signal_map() {
  return SignalMap{"PSEL", "PENABLE", "PWRITE", "PADDR", "PWDATA", "PRDATA", ""};
}

SignalMap signal_map_from_json(std::string_view json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorCode::BadConfig, "signal map is not a JSON object");
  auto role = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required)
        throw Error(ErrorCode::BadConfig, std::string("signal map missing ") + key);
      return {};
    }
    if (!j[key].is_string())
      throw Error(ErrorCode::BadConfig, std::string(key) + " must be a string");
    return j[key].get<std::string>();
  };
  SignalMap map;
  map.psel = role("PSEL", true);
  map.penable = role("PENABLE", true);
  map.pwrite = role("PWRITE", true);
  map.paddr = role("PADDR", true);
  map.pwdata = role("PWDATA", true);
  map.prdata = role("PRDATA", true);
  map.pready = role("PREADY", false);
  return map;
}

std::string signal_map_to_json(const SignalMap& map) {
  json j;
  j["PSEL"] = map.psel;
  j["PENABLE"] = map.penable;
  j["PWRITE"] = map.pwrite;
  j["PADDR"] = map.paddr;
  j["PWDATA"] = map.pwdata;
  j["PRDATA"] = map.prdata;
  if (!map.pready.empty()) j["PREADY"] = map.pready;
  return j.dump(2) + "\n";
}

std::vector<Transaction> extract_transactions(const vcd::Document& doc,
                                              const SignalMap& map) {
  ResolvedSignals sig = resolve(doc, map);

  // Snapshot the mapped signals at every distinct change time (zero-order hold).
  std::vector<Snapshot> timeline;
  {
    std::vector<std::uint64_t> times;
    for (const vcd::ValueChange& ch : doc.changes())
      if (times.empty() || ch.time != times.back()) times.push_back(ch.time);
    timeline.reserve(times.size());
    for (std::uint64_t t : times) {
      Snapshot s;
      s.time = t;
      s.psel = to_bit(doc.value_at(sig.psel, t));
      s.penable = to_bit(doc.value_at(sig.penable, t));
      s.pwrite = to_bit(doc.value_at(sig.pwrite, t));
      if (sig.has_pready) s.pready = to_bit(doc.value_at(sig.pready, t));
      s.paddr = doc.value_at(sig.paddr, t);
      s.pwdata = doc.value_at(sig.pwdata, t);
      s.prdata = doc.value_at(sig.prdata, t);
      timeline.push_back(std::move(s));
    }
  }

  std::vector<Transaction> txns;
  for (std::size_t k = 0; k < timeline.size(); ++k) {
    const Snapshot& now = timeline[k];
    if (now.penable == Bit::High && now.psel == Bit::Low)
      throw Error(ErrorCode::ProtocolViolation,
                  "PENABLE high while PSEL low at t=" + std::to_string(now.time));
    bool rising = k > 0 && timeline[k - 1].penable == Bit::Low &&
                  now.penable == Bit::High && now.psel == Bit::High;
    if (!rising) continue;

    // setup phase: most recent PSEL=1, PENABLE=0
    std::size_t setup = k;
    bool found_setup = false;
    for (std::size_t j = k; j-- > 0;) {
      if (timeline[j].psel == Bit::High && timeline[j].penable == Bit::Low) {
        setup = j;
        found_setup = true;
        break;
      }
    }
    if (!found_setup)
      throw Error(ErrorCode::ProtocolViolation,
                  "access phase without setup phase at t=" + std::to_string(now.time));
    const Snapshot& su = timeline[setup];
    if (su.pwrite == Bit::Unknown)
      throw Error(ErrorCode::XInPayload,
                  "PWRITE carries x/z at t=" + std::to_string(su.time));
    bool is_write = su.pwrite == Bit::High;

    // completion: first PREADY=1 at or after the access phase
    std::size_t done = k;
    if (sig.has_pready) {
      bool completed = false;
      for (std::size_t m = k; m < timeline.size(); ++m) {
        if (timeline[m].pready == Bit::High) {
          done = m;
          completed = true;
          break;
        }
      }
      if (!completed) continue;  // transfer still pending when the dump ends
    }

    Transaction txn;
    txn.address = sampled_word(su.paddr, "PADDR", su.time);
    txn.is_write = is_write;
    txn.data = is_write
                   ? sampled_word(now.pwdata, "PWDATA", now.time)
                   : sampled_word(timeline[done].prdata, "PRDATA", timeline[done].time);
    txn.time = timeline[done].time;
    if (!txns.empty() && txn.time <= txns.back().time)
      throw Error(ErrorCode::ProtocolViolation,
                  "transactions do not complete in increasing time order");
    txns.push_back(txn);
  }
  return txns;
}

Grouping group_samples(std::span<const Transaction> txns) {
  Grouping g;
  std::size_t full = txns.size() / kTransactionsPerSample;
  g.samples.reserve(full);
  for (std::size_t w = 0; w < full; ++w) {
    Sample s;
    std::copy_n(txns.begin() + w * kTransactionsPerSample, kTransactionsPerSample,
                s.txns.begin());
    g.samples.push_back(std::move(s));
  }
  g.remainder = txns.size() - full * kTransactionsPerSample;
  return g;
}

vcd::Document synth_waveform(std::span<const Transaction> txns,
                             const SignalMap& map, std::uint64_t period) {
  if (period == 0)
    throw Error(ErrorCode::BadConfig, "synth period must be > 0");

  const bool with_pready = !map.pready.empty();
  std::vector<vcd::VarDecl> vars = {
      {"s", 1, map.psel, "wire"},    {"e", 1, map.penable, "wire"},
      {"w", 1, map.pwrite, "wire"},  {"a", 32, map.paddr, "wire"},
      {"d", 32, map.pwdata, "wire"}, {"r", 32, map.prdata, "wire"},
  };
  if (with_pready) vars.push_back({"y", 1, map.pready, "wire"});

  using vcd::FourState;
  std::vector<vcd::ValueChange> changes;
  auto drive_bit = [&](std::uint64_t t, const char* id, bool value) {
    changes.push_back({t, id, {value ? FourState::One : FourState::Zero}});
  };
  auto drive_word = [&](std::uint64_t t, const char* id, std::uint32_t word) {
    changes.push_back({t, id, vcd::word_to_bits(word, 32)});
  };

  if (txns.empty()) {
    drive_bit(0, "s", false);
    drive_bit(0, "e", false);
    drive_bit(0, "w", false);
    drive_word(0, "a", 0);
    drive_word(0, "d", 0);
    if (with_pready) drive_bit(0, "y", false);
    return vcd::Document({1, "ns"}, std::move(vars), std::move(changes));
  }

  std::uint64_t prev_access = 0;
  bool first = true;
  for (const Transaction& txn : txns) {
    if (txn.time < period || (!first && txn.time - period <= prev_access))
      throw Error(ErrorCode::BadConfig,
                  "transaction times must leave room for a setup phase of one "
                  "period before each access");
    std::uint64_t setup = txn.time - period;
    drive_bit(setup, "s", true);
    drive_bit(setup, "e", false);
    drive_bit(setup, "w", txn.is_write);
    drive_word(setup, "a", txn.address);
    if (txn.is_write) drive_word(setup, "d", txn.data);
    if (with_pready) drive_bit(setup, "y", false);

    drive_bit(txn.time, "e", true);
    if (!txn.is_write) drive_word(txn.time, "r", txn.data);
    if (with_pready) drive_bit(txn.time, "y", true);

    prev_access = txn.time;
    first = false;
  }
  // return the bus to idle after the last access
  drive_bit(prev_access + period, "s", false);
  drive_bit(prev_access + period, "e", false);

  return vcd::Document({1, "ns"}, std::move(vars), std::move(changes));
}

}  // namespace apbtriage::apb
