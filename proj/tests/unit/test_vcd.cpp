#include <doctest.h>

#include <functional>
#include <iterator>
#include <string>

#include "apbtriage/error.hpp"
#include "apbtriage/rng.hpp"
#include "apbtriage/vcd.hpp"

using namespace apbtriage;
using vcd::Document;
using vcd::FourState;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

std::uint32_t word_at(const Document& doc, const std::string& id, std::uint64_t t) {
  auto bits = doc.value_at(id, t);
  REQUIRE(!vcd::bits_have_unknown(bits));
  return vcd::bits_to_word(bits);
}

// Random well-formed document for round-trip properties.
Document random_document(Rng& rng) {
  std::vector<vcd::VarDecl> vars;
  unsigned var_count = 1 + static_cast<unsigned>(rng.below(5));
  for (unsigned v = 0; v < var_count; ++v) {
    vcd::VarDecl var;
    var.id_code = std::string(1, static_cast<char>('!' + v));  // unique tokens
    if (rng.below(2)) var.id_code += static_cast<char>('a' + rng.below(26));
    unsigned widths[] = {1, 2, 4, 8, 32};
    var.width = widths[rng.below(5)];
    var.reference = "top.sig" + std::to_string(v);
    var.var_kind = rng.below(2) ? "wire" : "reg";
    vars.push_back(var);
  }
  std::vector<vcd::ValueChange> changes;
  std::uint64_t t = 0;
  unsigned change_count = static_cast<unsigned>(rng.below(50));
  for (unsigned c = 0; c < change_count; ++c) {
    t += rng.below(3);  // repeated timestamps are legal
    const vcd::VarDecl& var = vars[rng.below(vars.size())];
    std::vector<FourState> value(var.width);
    for (auto& bit : value) {
      switch (rng.below(8)) {
        case 6: bit = FourState::X; break;
        case 7: bit = FourState::Z; break;
        default: bit = rng.below(2) ? FourState::One : FourState::Zero;
      }
    }
    changes.push_back({t, var.id_code, value});
  }
  vcd::Timescale ts{static_cast<unsigned>(1 + rng.below(100)),
                    rng.below(2) ? "ns" : "ps"};
  return Document(ts, std::move(vars), std::move(changes));
}

}  // namespace

TEST_SUITE("vcd") {

TEST_CASE("minimal scalar dump") {
  Document doc = vcd::parse(
      "$timescale 1 ns $end\n"
      "$var wire 1 ! clk $end\n"
      "$enddefinitions $end\n"
      "#0\n0!\n#10\n1!\n");
  CHECK(doc.vars().size() == 1);
  CHECK(doc.vars()[0].reference == "clk");
  CHECK(doc.changes().size() == 2);
  CHECK(doc.value_at("!", 0) == std::vector<FourState>{FourState::Zero});
  CHECK(doc.value_at("!", 10) == std::vector<FourState>{FourState::One});
}

TEST_CASE("vector change left-extends with zeros") {
  Document doc = vcd::parse(
      "$timescale 1 ns $end\n"
      "$var wire 32 ! PADDR $end\n"
      "$enddefinitions $end\n"
      "#0\nb10001010 !\n");
  CHECK(word_at(doc, "!", 0) == 0x8Au);
}

TEST_CASE("x-lead vectors replicate the unknown") {
  Document doc = vcd::parse(
      "$timescale 1 ns $end\n"
      "$var wire 4 ! n $end\n"
      "$enddefinitions $end\n"
      "#0\nbx10 !\n");
  CHECK(doc.value_at("!", 0) ==
        std::vector<FourState>{FourState::X, FourState::X, FourState::One,
                               FourState::Zero});
  Document z = vcd::parse(
      "$timescale 1 ns $end\n$var wire 3 ! n $end\n$enddefinitions $end\n#0\nbz1 !\n");
  CHECK(z.value_at("!", 0) ==
        std::vector<FourState>{FourState::Z, FourState::Z, FourState::One});
}

TEST_CASE("value_at holds between changes and is x before the first") {
  Document doc = vcd::parse(
      "$timescale 1 ns $end\n"
      "$var wire 2 ! n $end\n"
      "$enddefinitions $end\n"
      "#5\nb01 !\n#9\nb10 !\n");
  CHECK(doc.value_at("!", 0) == std::vector<FourState>{FourState::X, FourState::X});
  CHECK(doc.value_at("!", 4) == std::vector<FourState>{FourState::X, FourState::X});
  CHECK(word_at(doc, "!", 5) == 1u);  // inclusive at the change
  CHECK(word_at(doc, "!", 7) == 1u);  // zero-order hold
  CHECK(word_at(doc, "!", 8) == 1u);
  CHECK(word_at(doc, "!", 9) == 2u);
  CHECK(word_at(doc, "!", 1000) == 2u);
}

TEST_CASE("scope names flatten into references") {
  Document doc = vcd::parse(
      "$timescale 1 ns $end\n"
      "$scope module top $end\n"
      "$scope module apb $end\n"
      "$var wire 1 ! psel $end\n"
      "$upscope $end\n"
      "$upscope $end\n"
      "$enddefinitions $end\n");
  CHECK(doc.vars()[0].reference == "top.apb.psel");
  CHECK(doc.find_var("top.apb.psel") != nullptr);
  CHECK(doc.find_var("!") != nullptr);
  CHECK(doc.find_var("nope") == nullptr);
}

TEST_CASE("dumpvars block carries initial values") {
  Document doc = vcd::parse(
      "$timescale 1 ns $end\n"
      "$var wire 1 ! clk $end\n"
      "$enddefinitions $end\n"
      "$dumpvars\n0!\n$end\n#10\n1!\n");
  CHECK(doc.value_at("!", 0) == std::vector<FourState>{FourState::Zero});
  CHECK(doc.value_at("!", 10) == std::vector<FourState>{FourState::One});
}

TEST_CASE("header directives are skipped") {
  Document doc = vcd::parse(
      "$date today $end\n"
      "$version sim 1.0 $end\n"
      "$comment anything at all $end\n"
      "$timescale 100 ps $end\n"
      "$var wire 1 ! clk $end\n"
      "$enddefinitions $end\n");
  CHECK(doc.timescale().magnitude == 100);
  CHECK(doc.timescale().unit == "ps");
}

TEST_CASE("timescale accepts glued magnitude and unit") {
  Document doc = vcd::parse(
      "$timescale 1ns $end\n$var wire 1 ! c $end\n$enddefinitions $end\n");
  CHECK(doc.timescale().magnitude == 1);
  CHECK(doc.timescale().unit == "ns");
}

TEST_CASE("declared parse errors") {
  const std::string header =
      "$timescale 1 ns $end\n$var wire 2 ! n $end\n$enddefinitions $end\n";
  CHECK(code_of([&] { vcd::parse(header + "#0\nb01 ?\n"); }) ==
        ErrorCode::UnknownIdCode);
  CHECK(code_of([&] { vcd::parse(header + "#0\nb010 !\n"); }) ==
        ErrorCode::WidthMismatch);
  CHECK(code_of([&] { vcd::parse(header + "#5\nb01 !\n#4\nb10 !\n"); }) ==
        ErrorCode::NonMonotonicTime);
  CHECK(code_of([&] { vcd::parse(header + "#0\nr3.14 !\n"); }) ==
        ErrorCode::MalformedDirective);
  CHECK(code_of([&] { vcd::parse("$timescale 1 ns $end\n$var wire 2 ! n\n"); }) ==
        ErrorCode::MalformedDirective);
  CHECK(code_of([&] { vcd::parse("$var wire 2 ! n $end\n$enddefinitions\n"); }) ==
        ErrorCode::MalformedDirective);
  CHECK(code_of([&] { vcd::parse(header + "#0\n$dumpoff\n"); }) ==
        ErrorCode::MalformedDirective);
  CHECK(code_of([&] {
          vcd::parse("$var wire 1 ! a $end\n$var wire 1 ! b $end\n"
                     "$enddefinitions $end\n");
        }) == ErrorCode::MalformedDirective);  // duplicate id
}

TEST_CASE("construction rejects decreasing times") {
  std::vector<vcd::VarDecl> vars = {{"!", 1, "clk", "wire"}};
  std::vector<vcd::ValueChange> changes = {{10, "!", {FourState::One}},
                                           {0, "!", {FourState::Zero}}};
  CHECK(code_of([&] { Document({1, "ns"}, vars, changes); }) ==
        ErrorCode::NonMonotonicTime);
}

TEST_CASE("empty change list emits header only") {
  Document doc({1, "ns"}, {{"!", 1, "clk", "wire"}}, {});
  std::string text = vcd::emit(doc);
  CHECK(text ==
        "$timescale 1 ns $end\n"
        "$var wire 1 ! clk $end\n"
        "$enddefinitions $end\n");
  CHECK(vcd::parse(text) == doc);
}

TEST_CASE("round trip: parse(emit(d)) == d over random documents") {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    Document doc = random_document(rng);
    Document reparsed = vcd::parse(vcd::emit(doc));
    REQUIRE(reparsed == doc);
  }
}

TEST_CASE("zero-order hold: queries between changes agree") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    Document doc = random_document(rng);
    for (const vcd::VarDecl& var : doc.vars()) {
      std::uint64_t probe = rng.below(120);
      auto a = doc.value_at(var.id_code, probe);
      auto b = doc.value_at(var.id_code, probe);  // same instant, same answer
      REQUIRE(a == b);
    }
  }
}

TEST_CASE("parser totality: arbitrary input parses or raises a declared error") {
  static const char* fragments[] = {
      "$timescale", "$var", "$end", "$enddefinitions", "$scope", "$upscope",
      "module", "wire", "1", "32", "!", "top", "#0", "#5", "b101", "0!", "1!",
      "bx1 !", "r1.5 !", "#", "b", "$dumpvars", "x!", "$comment", "stuff"};
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    unsigned len = static_cast<unsigned>(rng.below(24));
    for (unsigned t = 0; t < len; ++t) {
      text += fragments[rng.below(std::size(fragments))];
      text += rng.below(4) == 0 ? '\n' : ' ';
    }
    try {
      vcd::parse(text);
    } catch (const Error& e) {
      bool declared = e.code() == ErrorCode::UnknownIdCode ||
                      e.code() == ErrorCode::WidthMismatch ||
                      e.code() == ErrorCode::MalformedDirective ||
                      e.code() == ErrorCode::NonMonotonicTime;
      REQUIRE(declared);
    }
  }
}

}  // TEST_SUITE
