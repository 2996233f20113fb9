#include "apbtriage/vcd.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "apbtriage/error.hpp"

namespace apbtriage::vcd {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

// Whitespace-delimited token stream over the document text.
class Tokenizer {
 public:
  explicit Tokenizer(std::string_view text) : text_(text) {}

  // Empty result means end of input; VCD tokens are never empty.
  std::string_view next() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
    if (pos_ >= text_.size()) return {};
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

FourState state_from_char(char c) {
  switch (c) {
    case '0': return FourState::Zero;
    case '1': return FourState::One;
    case 'x': case 'X': return FourState::X;
    case 'z': case 'Z': return FourState::Z;
    default:
      throw Error(ErrorCode::MalformedDirective,
                  std::string("invalid value character '") + c + "'");
  }
}

std::uint64_t parse_u64(std::string_view text, const char* what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorCode::MalformedDirective,
                std::string("invalid ") + what + " '" + std::string(text) + "'");
  return value;
}

// Left-extension per IEEE 1364: 0/1 extend with zeros, x/z replicate.
std::vector<FourState> extend_to_width(const std::vector<FourState>& bits,
                                       unsigned width, const std::string& id) {
  if (bits.size() > width)
    throw Error(ErrorCode::WidthMismatch,
                "value of width " + std::to_string(bits.size()) + " for var '" + id +
                    "' declared " + std::to_string(width));
  if (bits.size() == width) return bits;
  std::vector<FourState> out;
  out.reserve(width);
  FourState fill = FourState::Zero;
  if (!bits.empty() && (bits.front() == FourState::X || bits.front() == FourState::Z))
    fill = bits.front();
  out.assign(width - bits.size(), fill);
  out.insert(out.end(), bits.begin(), bits.end());
  return out;
}

struct ParserState {
  Timescale timescale;
  std::vector<VarDecl> vars;
  std::vector<ValueChange> changes;
  std::unordered_map<std::string, unsigned> widths;
  std::vector<std::string> scope_stack;
  std::uint64_t now = 0;
  bool time_seen = false;
  bool header_done = false;
};

void require_end(Tokenizer& toks, const char* directive) {
  std::string_view t = toks.next();
  if (t != "$end")
    throw Error(ErrorCode::MalformedDirective,
                std::string(directive) + " not terminated by $end");
}

void skip_to_end(Tokenizer& toks, const char* directive) {
  for (;;) {
    std::string_view t = toks.next();
    if (t.empty())
      throw Error(ErrorCode::MalformedDirective,
                  std::string(directive) + " not terminated by $end");
    if (t == "$end") return;
  }
}

void parse_timescale(Tokenizer& toks, ParserState& st) {
  std::vector<std::string> parts;
  for (;;) {
    std::string_view t = toks.next();
    if (t.empty())
      throw Error(ErrorCode::MalformedDirective, "$timescale not terminated by $end");
    if (t == "$end") break;
    parts.emplace_back(t);
  }
  std::string joined;
  for (const auto& p : parts) joined += p;
  std::size_t digits = 0;
  while (digits < joined.size() && std::isdigit(static_cast<unsigned char>(joined[digits])))
    ++digits;
  if (digits == 0 || digits == joined.size())
    throw Error(ErrorCode::MalformedDirective, "bad $timescale '" + joined + "'");
  st.timescale.magnitude =
      static_cast<unsigned>(parse_u64(std::string_view(joined).substr(0, digits), "timescale"));
  st.timescale.unit = joined.substr(digits);
}

void parse_var(Tokenizer& toks, ParserState& st) {
  std::vector<std::string> parts;
  for (;;) {
    std::string_view t = toks.next();
    if (t.empty())
      throw Error(ErrorCode::MalformedDirective, "$var not terminated by $end");
    if (t == "$end") break;
    parts.emplace_back(t);
  }
  if (parts.size() < 4)
    throw Error(ErrorCode::MalformedDirective, "$var expects kind, width, id, reference");
  VarDecl var;
  var.var_kind = parts[0];
  var.width = static_cast<unsigned>(parse_u64(parts[1], "$var width"));
  if (var.width < 1)
    throw Error(ErrorCode::MalformedDirective, "$var width must be >= 1");
  var.id_code = parts[2];
  std::string ref = parts[3];
  for (std::size_t i = 4; i < parts.size(); ++i) ref += parts[i];  // glue bit ranges
  for (auto it = st.scope_stack.rbegin(); it != st.scope_stack.rend(); ++it)
    ref = *it + "." + ref;
  var.reference = ref;
  if (st.widths.count(var.id_code))
    throw Error(ErrorCode::MalformedDirective, "duplicate id code '" + var.id_code + "'");
  st.widths.emplace(var.id_code, var.width);
  st.vars.push_back(std::move(var));
}

unsigned declared_width(const ParserState& st, const std::string& id) {
  auto it = st.widths.find(id);
  if (it == st.widths.end())
    throw Error(ErrorCode::UnknownIdCode, "value change for undeclared var '" + id + "'");
  return it->second;
}

void add_change(ParserState& st, std::string id, std::vector<FourState> bits) {
  unsigned width = declared_width(st, id);
  std::vector<FourState> value = extend_to_width(bits, width, id);
  st.changes.push_back(ValueChange{st.now, std::move(id), std::move(value)});
}

void parse_value_change(Tokenizer& toks, std::string_view token, ParserState& st) {
  char c = token[0];
  if (c == 'b' || c == 'B') {
    if (token.size() < 2)
      throw Error(ErrorCode::MalformedDirective, "empty vector value");
    std::vector<FourState> bits;
    bits.reserve(token.size() - 1);
    for (char bc : token.substr(1)) bits.push_back(state_from_char(bc));
    std::string_view id = toks.next();
    if (id.empty())
      throw Error(ErrorCode::MalformedDirective, "vector value without id code");
    add_change(st, std::string(id), std::move(bits));
  } else if (c == 'r' || c == 'R') {
    throw Error(ErrorCode::MalformedDirective, "real value changes not supported");
  } else {
    // scalar change: value character glued to the id code
    if (token.size() < 2)
      throw Error(ErrorCode::MalformedDirective,
                  "scalar change '" + std::string(token) + "' missing id code");
    add_change(st, std::string(token.substr(1)), {state_from_char(c)});
  }
}

}  // namespace

char to_char(FourState s) {
  switch (s) {
    case FourState::Zero: return '0';
    case FourState::One: return '1';
    case FourState::X: return 'x';
    case FourState::Z: return 'z';
  }
  return 'x';
}

Document::Document(Timescale timescale, std::vector<VarDecl> vars,
                   std::vector<ValueChange> changes)
    : timescale_(std::move(timescale)), vars_(std::move(vars)),
      changes_(std::move(changes)) {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (!var_index_.emplace(vars_[i].id_code, i).second)
      throw Error(ErrorCode::MalformedDirective,
                  "duplicate id code '" + vars_[i].id_code + "'");
  }
  std::uint64_t prev = 0;
  for (std::size_t i = 0; i < changes_.size(); ++i) {
    const ValueChange& ch = changes_[i];
    auto it = var_index_.find(ch.id_code);
    if (it == var_index_.end())
      throw Error(ErrorCode::UnknownIdCode,
                  "change references undeclared var '" + ch.id_code + "'");
    if (ch.value.size() != vars_[it->second].width)
      throw Error(ErrorCode::WidthMismatch,
                  "change value width " + std::to_string(ch.value.size()) +
                      " != declared " + std::to_string(vars_[it->second].width) +
                      " for '" + ch.id_code + "'");
    if (i > 0 && ch.time < prev)
      throw Error(ErrorCode::NonMonotonicTime,
                  "time " + std::to_string(ch.time) + " after " + std::to_string(prev));
    prev = ch.time;
    change_index_[ch.id_code].push_back(i);
  }
}

const VarDecl* Document::find_var(std::string_view id_or_reference) const {
  auto it = var_index_.find(std::string(id_or_reference));
  if (it != var_index_.end()) return &vars_[it->second];
  for (const VarDecl& var : vars_)
    if (var.reference == id_or_reference) return &var;
  return nullptr;
}

std::vector<FourState> Document::value_at(std::string_view id_code,
                                          std::uint64_t time) const {
  auto vit = var_index_.find(std::string(id_code));
  if (vit == var_index_.end())
    throw Error(ErrorCode::UnknownIdCode, "unknown id code '" + std::string(id_code) + "'");
  const VarDecl& var = vars_[vit->second];
  auto cit = change_index_.find(var.id_code);
  const ValueChange* latest = nullptr;
  if (cit != change_index_.end()) {
    // changes per id are time-ordered; binary search the last one at or before `time`
    const auto& idx = cit->second;
    auto pos = std::upper_bound(idx.begin(), idx.end(), time,
                                [&](std::uint64_t t, std::size_t i) {
                                  return t < changes_[i].time;
                                });
    if (pos != idx.begin()) latest = &changes_[*std::prev(pos)];
  }
  if (!latest) return std::vector<FourState>(var.width, FourState::X);
  return latest->value;
}

bool Document::operator==(const Document& other) const {
  return timescale_ == other.timescale_ && vars_ == other.vars_ &&
         changes_ == other.changes_;
}

Document parse(std::string_view text) {
  Tokenizer toks(text);
  ParserState st;
  for (;;) {
    std::string_view token = toks.next();
    if (token.empty()) break;
    if (token[0] == '$') {
      if (token == "$timescale") {
        parse_timescale(toks, st);
      } else if (token == "$scope") {
        std::string_view kind = toks.next();
        std::string_view name = toks.next();
        if (kind.empty() || name.empty())
          throw Error(ErrorCode::MalformedDirective, "$scope expects type and name");
        st.scope_stack.emplace_back(name);
        require_end(toks, "$scope");
      } else if (token == "$upscope") {
        if (st.scope_stack.empty())
          throw Error(ErrorCode::MalformedDirective, "$upscope without open scope");
        st.scope_stack.pop_back();
        require_end(toks, "$upscope");
      } else if (token == "$var") {
        parse_var(toks, st);
      } else if (token == "$enddefinitions") {
        require_end(toks, "$enddefinitions");
        st.header_done = true;
      } else if (token == "$dumpvars") {
        // initial values; contents are ordinary changes at the current time
        if (!st.header_done)
          throw Error(ErrorCode::MalformedDirective, "$dumpvars before $enddefinitions");
      } else if (token == "$comment" || token == "$date" || token == "$version") {
        skip_to_end(toks, "header directive");
      } else if (token == "$end") {
        // closes a $dumpvars block
      } else {
        throw Error(ErrorCode::MalformedDirective,
                    "unsupported directive '" + std::string(token) + "'");
      }
    } else if (token[0] == '#') {
      std::uint64_t t = parse_u64(token.substr(1), "timestamp");
      if (st.time_seen && t < st.now)
        throw Error(ErrorCode::NonMonotonicTime,
                    "timestamp " + std::to_string(t) + " after " + std::to_string(st.now));
      st.now = t;
      st.time_seen = true;
    } else {
      if (!st.header_done)
        throw Error(ErrorCode::MalformedDirective,
                    "value change before $enddefinitions");
      parse_value_change(toks, token, st);
    }
  }
  if (!st.header_done)
    throw Error(ErrorCode::MalformedDirective, "missing $enddefinitions");
  return Document(std::move(st.timescale), std::move(st.vars), std::move(st.changes));
}

std::string emit(const Document& doc) {
  std::ostringstream out;
  out << "$timescale " << doc.timescale().magnitude << ' ' << doc.timescale().unit
      << " $end\n";
  for (const VarDecl& var : doc.vars())
    out << "$var " << var.var_kind << ' ' << var.width << ' ' << var.id_code << ' '
        << var.reference << " $end\n";
  out << "$enddefinitions $end\n";
  bool have_time = false;
  std::uint64_t now = 0;
  for (const ValueChange& ch : doc.changes()) {
    if (!have_time || ch.time != now) {
      out << '#' << ch.time << '\n';
      now = ch.time;
      have_time = true;
    }
    if (ch.value.size() == 1) {
      out << to_char(ch.value[0]) << ch.id_code << '\n';
    } else {
      out << 'b';
      for (FourState s : ch.value) out << to_char(s);
      out << ' ' << ch.id_code << '\n';
    }
  }
  return std::move(out).str();
}

std::vector<FourState> word_to_bits(std::uint32_t word, unsigned width) {
  std::vector<FourState> bits(width);
  for (unsigned i = 0; i < width; ++i) {
    unsigned bit = width - 1 - i;  // MSB first
    bits[i] = ((word >> bit) & 1u) ? FourState::One : FourState::Zero;
  }
  return bits;
}

bool bits_have_unknown(const std::vector<FourState>& bits) {
  return std::any_of(bits.begin(), bits.end(), [](FourState s) {
    return s == FourState::X || s == FourState::Z;
  });
}

std::uint32_t bits_to_word(const std::vector<FourState>& bits) {
  std::uint32_t word = 0;
  for (FourState s : bits) {
    word <<= 1;
    if (s == FourState::One) word |= 1u;
  }
  return word;
}

}  // namespace apbtriage::vcd
