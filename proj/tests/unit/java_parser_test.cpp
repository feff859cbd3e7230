#include <gtest/gtest.h>

#include "exguard/analysis.hpp"
#include "exguard/errors.hpp"
#include "exguard/java_source.hpp"
#include "test_support.hpp"

using namespace exguard;
using exguard::testing::read_fixture;

namespace {

std::vector<std::string> names(const std::vector<CallSite>& calls) {
  std::vector<std::string> out;
  for (const auto& c : calls) out.push_back(c.simple_name);
  return out;
}

std::vector<std::string> names_of(const std::string& code) { return names(extract_invocations(code)); }

}  // namespace

TEST(Extract, SwapMethodHasFourCalls) {
  const auto calls = extract_invocations(read_fixture("java/swap_a.java"));
  EXPECT_EQ(names(calls), (std::vector<std::string>{"get", "get", "set", "set"}));
  EXPECT_EQ(calls[0].arity, 1u);
  EXPECT_EQ(calls[2].arity, 2u);
  for (const auto& c : calls) {
    EXPECT_EQ(c.receiver_hint, "Vector<Integer>");
    EXPECT_TRUE(c.qualified);
  }
}

TEST(Extract, ArithmeticHasNoCalls) { EXPECT_TRUE(extract_invocations(read_fixture("java/arithmetic.java")).empty()); }

TEST(Extract, ChainedCallsInSourceOrder) {
  EXPECT_EQ(names_of(read_fixture("java/chained.java")), (std::vector<std::string>{"get", "toString"}));
}

// Reference enumeration of kitchen_sink.java, written by reading the file.
TEST(Extract, KitchenSinkReferenceEnumeration) {
  EXPECT_EQ(names_of(read_fixture("java/kitchen_sink.java")),
            (std::vector<std::string>{"helper", "requireNonNull", "size", "hasNext", "toString", "trim", "valueOf",
                                      "length", "toUpperCase", "toLowerCase", "forEach", "add", "apply", "stream",
                                      "map", "forEach", "compareTo", "sort", "readLine", "write", "println"}));
}

TEST(Extract, SpansLieInsideTheSource) {
  for (const auto* f : {"java/swap_a.java", "java/swap_d.java", "java/kitchen_sink.java", "java/chained.java"}) {
    const auto text = read_fixture(f);
    for (const auto& c : extract_invocations(text)) {
      ASSERT_LE(c.span.end, text.size());
      ASSERT_LT(c.span.begin, c.span.end);
      const auto piece = text.substr(c.span.begin, c.span.end - c.span.begin);
      EXPECT_NE(piece.find(c.simple_name), std::string::npos) << piece;
      EXPECT_EQ(piece.back(), ')') << piece;
    }
  }
}

TEST(Extract, ConstructorsAndMethodReferencesAreNotInvocations) {
  const std::string code = R"(
class A {
  A() { this(1); }
  A(int x) { super(); }
  void f() {
    Object o = new java.util.ArrayList<String>(new java.util.HashSet<>());
    Runnable r = this::g;
    java.util.function.Function<String, Integer> p = Integer::parseInt;
    g();
  }
  void g() {}
})";
  EXPECT_EQ(names_of(code), (std::vector<std::string>{"g"}));
}

TEST(Extract, ArityCountsTopLevelArguments) {
  const auto calls = extract_invocations("class A { void f(java.util.Map<String, Integer> m) { m.put(k(1, 2), (3 + 4)); m.clear(); } int k(int a, int b) { return a; } }");
  ASSERT_EQ(calls.size(), 3u);
  EXPECT_EQ(calls[0].simple_name, "put");
  EXPECT_EQ(calls[0].arity, 2u);
  EXPECT_EQ(calls[1].simple_name, "k");
  EXPECT_EQ(calls[1].arity, 2u);
  EXPECT_EQ(calls[2].arity, 0u);
}

TEST(Extract, GenericsAndShiftsParse) {
  EXPECT_NO_THROW(JavaSource::parse(
      "class A { java.util.Map<String, java.util.List<java.util.Map<Integer, String>>> m; int f(int a) { return a >>> 2 >> 1; } "
      "boolean g(int a, int b) { return a < b && b > a; } }"));
}

TEST(Extract, BareMethodSnippetParses) {
  const auto calls = extract_invocations("public static int first(java.util.Stack<Integer> s) { return s.pop(); }");
  ASSERT_EQ(calls.size(), 1u);
  EXPECT_EQ(calls[0].simple_name, "pop");
}

TEST(Extract, MalformedSourceReportsLocation) {
  try {
    JavaSource::parse(read_fixture("java/malformed.java"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 22u);
  }
  EXPECT_THROW(JavaSource::parse("class A { void f() { try { } } }"), ParseError);
  EXPECT_THROW(JavaSource::parse("class A { void f() { \"unterminated } }"), ParseError);
  EXPECT_THROW(JavaSource::parse("class A {"), ParseError);
}

TEST(Extract, DeepNestingIsAnErrorNotACrash) {
  std::string expr(5000, '(');
  expr += "1" + std::string(5000, ')');
  EXPECT_THROW(JavaSource::parse("class A { int f() { return " + expr + "; } }"), ParseError);
}

TEST(Extract, ParsingIsDeterministic) {
  const auto text = read_fixture("java/kitchen_sink.java");
  const auto a = extract_invocations(text);
  const auto b = extract_invocations(text);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].simple_name, b[i].simple_name);
    EXPECT_EQ(a[i].span, b[i].span);
    EXPECT_EQ(a[i].receiver_hint, b[i].receiver_hint);
  }
}

TEST(Source, ImportsAndPositions) {
  const auto src = JavaSource::parse(read_fixture("java/kitchen_sink.java"));
  EXPECT_EQ(src.package_name(), "demo.sink");
  ASSERT_EQ(src.imports().size(), 4u);
  EXPECT_TRUE(src.imports()[0].on_demand);
  EXPECT_TRUE(src.imports()[3].is_static);
  const auto calls = extract_invocations(src);
  EXPECT_EQ(calls.back().position.line, 102u);
}

TEST(Source, ReceiverHints) {
  const auto calls = extract_invocations(R"(
import java.util.*;
class A {
  private Stack<String> stack;
  void f(List<Integer> xs) {
    var sb = new StringBuilder();
    sb.deleteCharAt(0);
    xs.get(0);
    this.stack.pop();
    stack.peek();
    Integer.parseInt("1");
    "abc".charAt(1);
    ((Vector<Integer>) xs).get(1);
  }
})");
  ASSERT_EQ(calls.size(), 7u);
  EXPECT_EQ(calls[0].receiver_hint, "StringBuilder");
  EXPECT_EQ(calls[1].receiver_hint, "List<Integer>");
  EXPECT_EQ(calls[2].receiver_hint, "Stack<String>");
  EXPECT_EQ(calls[3].receiver_hint, "Stack<String>");
  EXPECT_EQ(calls[4].receiver_hint, "Integer");
  EXPECT_EQ(calls[5].receiver_hint, "String");
  EXPECT_EQ(calls[6].receiver_hint, "Vector<Integer>");
}
