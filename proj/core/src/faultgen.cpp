#include "apbtriage/faultgen.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "apbtriage/error.hpp"
#include "parallel.hpp"

namespace apbtriage::faultgen {

namespace {

using nlohmann::json;

// Access-phase time grid used for generated samples; JSONL does not persist
// times, so the reader lays transactions back onto the same grid.
constexpr std::uint64_t kAccessPeriod = 10;
constexpr std::uint64_t kShuffleStream = ~0ull;

constexpr std::uint64_t kAddressSpace = 1ull << 32;

std::string to_hex(std::uint32_t word) {
  static const char digits[] = "0123456789ABCDEF";
  std::string s = "0x00000000";
  for (int i = 0; i < 8; ++i) s[9 - i] = digits[(word >> (4 * i)) & 0xF];
  return s;
}

std::uint32_t from_hex(const std::string& text) {
  if (text.size() < 3 || text.size() > 10 || text[0] != '0' ||
      (text[1] != 'x' && text[1] != 'X'))
    throw Error(ErrorCode::BadConfig, "bad hex word '" + text + "'");
  std::uint64_t value = 0;
  for (std::size_t i = 2; i < text.size(); ++i) {
    char c = text[i];
    std::uint64_t nibble;
    if (c >= '0' && c <= '9') nibble = static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') nibble = static_cast<std::uint64_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') nibble = static_cast<std::uint64_t>(c - 'A' + 10);
    else throw Error(ErrorCode::BadConfig, "bad hex word '" + text + "'");
    value = (value << 4) | nibble;
  }
  return static_cast<std::uint32_t>(value);
}

void set_pair(std::uint32_t& word, unsigned pair_index, bool bit) {
  std::uint32_t mask = 3u << pair_index;
  word = bit ? (word | mask) : (word & ~mask);
}

apb::Sample make_sample(const GenSpec& spec, apb::Label label, std::uint64_t index) {
  Rng rng = Rng::substream(spec.seed, index);
  apb::Sample s = gen_clean_sample(rng, spec.address_map, spec.read_fraction);
  switch (label) {
    case apb::Label::NoError: break;
    case apb::Label::OutOfRange:
      s = inject_out_of_range(std::move(s), spec.address_map, rng);
      break;
    case apb::Label::AddressError:
      s = inject_address_short(std::move(s), rng, spec.address_map);
      break;
    case apb::Label::DataError0:
      s = inject_data_stuck(std::move(s), rng, StuckPattern::Zeros);
      break;
    case apb::Label::DataError1:
      s = inject_data_stuck(std::move(s), rng, StuckPattern::Ones);
      break;
  }
  return s;
}

}  // namespace

AddressMap::AddressMap(std::vector<AddressRange> ranges) : ranges_(std::move(ranges)) {
  if (ranges_.empty())
    throw Error(ErrorCode::BadConfig, "address map needs at least one range");
  std::sort(ranges_.begin(), ranges_.end(),
            [](const AddressRange& a, const AddressRange& b) { return a.base < b.base; });
  for (std::size_t i = 0; i < ranges_.size(); ++i) {
    if (ranges_[i].base > ranges_[i].last)
      throw Error(ErrorCode::BadConfig, "address range base above last");
    if (i > 0 && ranges_[i].base <= ranges_[i - 1].last)
      throw Error(ErrorCode::BadConfig, "address ranges overlap");
    valid_count_ += static_cast<std::uint64_t>(ranges_[i].last) - ranges_[i].base + 1;
  }
  if (valid_count_ >= kAddressSpace)
    throw Error(ErrorCode::MapCoversFullSpace,
                "no out-of-range addresses exist under this map");
}

bool AddressMap::contains(std::uint32_t address) const {
  auto it = std::upper_bound(
      ranges_.begin(), ranges_.end(), address,
      [](std::uint32_t a, const AddressRange& r) { return a < r.base; });
  if (it == ranges_.begin()) return false;
  --it;
  return address <= it->last;
}

std::uint32_t AddressMap::sample_inside(Rng& rng) const {
  std::uint64_t offset = rng.below(valid_count_);
  for (const AddressRange& r : ranges_) {
    std::uint64_t size = static_cast<std::uint64_t>(r.last) - r.base + 1;
    if (offset < size) return r.base + static_cast<std::uint32_t>(offset);
    offset -= size;
  }
  return ranges_.back().last;  // unreachable
}

std::uint32_t AddressMap::sample_outside(Rng& rng) const {
  std::uint64_t hole_count = kAddressSpace - valid_count_;
  if (hole_count == 0)
    throw Error(ErrorCode::MapCoversFullSpace,
                "no out-of-range addresses exist under this map");
  std::uint64_t offset = rng.below(hole_count);
  std::uint64_t cursor = 0;  // next unexamined address
  for (const AddressRange& r : ranges_) {
    std::uint64_t gap = r.base - cursor;
    if (offset < gap) return static_cast<std::uint32_t>(cursor + offset);
    offset -= gap;
    cursor = static_cast<std::uint64_t>(r.last) + 1;
  }
  return static_cast<std::uint32_t>(cursor + offset);
}

std::uint64_t GenSpec::total_count() const {
  std::uint64_t total = 0;
  for (std::uint64_t c : count_per_label) total += c;
  return total;
}

apb::Sample gen_clean_sample(Rng& rng, const AddressMap& map, double read_fraction) {
  apb::Sample s;
  s.label = apb::Label::NoError;
  for (std::size_t t = 0; t < apb::kTransactionsPerSample; ++t) {
    apb::Transaction& txn = s.txns[t];
    txn.address = map.sample_inside(rng);
    txn.data = rng.next_u32();
    txn.is_write = !rng.next_bernoulli(read_fraction);
    txn.time = (2 * t + 1) * kAccessPeriod;
  }
  return s;
}

apb::Sample apply_address_bridge(apb::Sample s, unsigned pair_index) {
  for (apb::Transaction& txn : s.txns) {
    bool wired_or = ((txn.address >> pair_index) & 3u) != 0;
    set_pair(txn.address, pair_index, wired_or);
  }
  return s;
}

apb::Sample apply_data_stuck(apb::Sample s, unsigned pair_index, StuckPattern pattern) {
  for (apb::Transaction& txn : s.txns)
    set_pair(txn.data, pair_index, pattern == StuckPattern::Ones);
  return s;
}

apb::Sample inject_out_of_range(apb::Sample s, const AddressMap& map, Rng& rng) {
  std::size_t k = 1 + static_cast<std::size_t>(rng.below(apb::kTransactionsPerSample));
  std::array<std::size_t, apb::kTransactionsPerSample> positions;
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t swap_with = j + static_cast<std::size_t>(rng.below(positions.size() - j));
    std::swap(positions[j], positions[swap_with]);
    s.txns[positions[j]].address = map.sample_outside(rng);
  }
  s.label = apb::Label::OutOfRange;
  return s;
}

apb::Sample inject_address_short(apb::Sample s, Rng& rng) {
  unsigned pair_index = static_cast<unsigned>(rng.below(31));
  s = apply_address_bridge(std::move(s), pair_index);
  s.label = apb::Label::AddressError;
  return s;
}

apb::Sample inject_address_short(apb::Sample s, Rng& rng, const AddressMap& map) {
  std::vector<unsigned> eligible;
  for (unsigned i = 0; i < 31; ++i) {
    apb::Sample bridged = apply_address_bridge(s, i);
    bool in_map = true;
    for (const apb::Transaction& txn : bridged.txns)
      in_map = in_map && map.contains(txn.address);
    if (in_map) eligible.push_back(i);
  }
  if (eligible.empty())
    throw Error(ErrorCode::BadConfig,
                "no adjacent-pair short keeps this sample inside the address map");
  unsigned pair_index = eligible[rng.below(eligible.size())];
  s = apply_address_bridge(std::move(s), pair_index);
  s.label = apb::Label::AddressError;
  return s;
}

apb::Sample inject_data_stuck(apb::Sample s, Rng& rng, StuckPattern pattern) {
  unsigned pair_index = static_cast<unsigned>(rng.below(31));
  s = apply_data_stuck(std::move(s), pair_index, pattern);
  s.label = pattern == StuckPattern::Zeros ? apb::Label::DataError0
                                           : apb::Label::DataError1;
  return s;
}

Dataset generate_dataset(const GenSpec& spec, unsigned jobs) {
  std::uint64_t total = spec.total_count();
  if (total == 0)
    throw Error(ErrorCode::BadConfig, "dataset spec requests zero samples");
  if (spec.read_fraction < 0.0 || spec.read_fraction > 1.0)
    throw Error(ErrorCode::BadConfig, "read_fraction must lie in [0, 1]");

  // label blocks in Label order; sample index g seeds its own substream
  std::vector<apb::Label> plan;
  plan.reserve(total);
  for (std::size_t l = 0; l < apb::kLabelCount; ++l)
    plan.insert(plan.end(), spec.count_per_label[l], static_cast<apb::Label>(l));

  Dataset ds;
  ds.spec = spec;
  ds.samples.resize(total);
  detail::run_partitioned(total, jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t g = begin; g < end; ++g)
      ds.samples[g] = make_sample(spec, plan[g], g);
  });

  Rng shuffle = Rng::substream(spec.seed, kShuffleStream);
  for (std::size_t i = total; i-- > 1;)
    std::swap(ds.samples[i], ds.samples[shuffle.below(i + 1)]);
  return ds;
}

std::optional<StuckPairFinding> stuck_pair_oracle(const apb::Sample& s,
                                                  apb::Field field) {
  for (unsigned i = 0; i < 31; ++i) {
    bool all_equal = true;
    bool all_zeros = true;
    bool all_ones = true;
    for (const apb::Transaction& txn : s.txns) {
      std::uint32_t word = field == apb::Field::Address ? txn.address : txn.data;
      std::uint32_t pair = (word >> i) & 3u;
      if (pair == 1 || pair == 2) {
        all_equal = false;
        break;
      }
      if (pair == 0) all_ones = false;
      if (pair == 3) all_zeros = false;
    }
    if (!all_equal) continue;
    PairPattern pattern = PairPattern::EqualMixed;
    if (all_zeros) pattern = PairPattern::Zeros;
    else if (all_ones) pattern = PairPattern::Ones;
    return StuckPairFinding{i, pattern};
  }
  return std::nullopt;
}

void write_dataset(const Dataset& ds, std::ostream& out) {
  json header;
  header["format"] = "apbtriage-dataset";
  header["version"] = 1;
  header["seed"] = ds.spec.seed;
  json counts;
  for (std::size_t l = 0; l < apb::kLabelCount; ++l)
    counts[std::string(apb::label_name(static_cast<apb::Label>(l)))] =
        ds.spec.count_per_label[l];
  header["counts"] = counts;
  header["read_fraction"] = ds.spec.read_fraction;
  json ranges = json::array();
  for (const AddressRange& r : ds.spec.address_map.ranges())
    ranges.push_back(json::array({to_hex(r.base), to_hex(r.last)}));
  header["address_map"] = ranges;
  out << header.dump() << '\n';

  for (const apb::Sample& s : ds.samples) {
    if (!s.label)
      throw Error(ErrorCode::UnknownLabel, "dataset sample without a label");
    json line;
    line["label"] = std::string(apb::label_name(*s.label));
    json txns = json::array();
    for (const apb::Transaction& txn : s.txns) {
      json t;
      t["addr"] = to_hex(txn.address);
      t["data"] = to_hex(txn.data);
      t["w"] = txn.is_write;
      txns.push_back(std::move(t));
    }
    line["txns"] = std::move(txns);
    out << line.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::BadConfig, "empty dataset file");
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() ||
      header.value("format", "") != "apbtriage-dataset")
    throw Error(ErrorCode::BadConfig, "not an apbtriage dataset file");
  if (header.value("version", 0) != 1)
    throw Error(ErrorCode::VersionMismatch, "unsupported dataset version");

  Dataset ds;
  ds.spec.seed = header.value("seed", 0ull);
  ds.spec.read_fraction = header.value("read_fraction", 0.0);
  if (header.contains("counts")) {
    for (std::size_t l = 0; l < apb::kLabelCount; ++l) {
      std::string name(apb::label_name(static_cast<apb::Label>(l)));
      ds.spec.count_per_label[l] = header["counts"].value(name, 0ull);
    }
  }
  if (header.contains("address_map") && header["address_map"].is_array() &&
      !header["address_map"].empty()) {
    std::vector<AddressRange> ranges;
    for (const json& r : header["address_map"])
      ranges.push_back({from_hex(r.at(0).get<std::string>()),
                        from_hex(r.at(1).get<std::string>())});
    ds.spec.address_map = AddressMap(std::move(ranges));
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("label") ||
        !j.contains("txns") || !j["txns"].is_array() ||
        j["txns"].size() != apb::kTransactionsPerSample)
      throw Error(ErrorCode::BadConfig,
                  "bad dataset line " + std::to_string(line_no));
    apb::Sample s;
    s.label = apb::label_from_name(j["label"].get<std::string>());
    for (std::size_t t = 0; t < apb::kTransactionsPerSample; ++t) {
      const json& jt = j["txns"][t];
      apb::Transaction& txn = s.txns[t];
      txn.address = from_hex(jt.at("addr").get<std::string>());
      txn.data = from_hex(jt.at("data").get<std::string>());
      txn.is_write = jt.value("w", true);
      txn.time = (2 * t + 1) * kAccessPeriod;
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace apbtriage::faultgen
