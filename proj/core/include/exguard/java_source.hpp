#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace exguard {

/// Half-open byte range into the source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

struct SourcePosition {
  std::size_t line = 1;
  std::size_t column = 1;
};

/// A construct that may handle exceptions raised inside it.
///
/// Contexts form a tree through `parent`; every invocation points at its
/// innermost one. For a Try the `types` are the caught types (filled once the
/// catch clauses are parsed), for a Method its throws clause, and for a Guard
/// the exception types thrown by the if-branch that dominates the region.
struct HandlingContext {
  enum class Kind { Method, Try, Guard };

  Kind kind = Kind::Method;
  int parent = -1;
  std::vector<std::string> types;
  std::vector<std::string> condition_identifiers;  // Guard only
  std::size_t line = 0;
};

/// One method-invocation expression.
struct Invocation {
  std::string name;
  std::size_t arity = 0;
  Span span;
  std::size_t name_offset = 0;
  SourcePosition position;        // of the method name
  std::string receiver_hint;      // declared type of the receiver when visible
  int context = -1;
  std::vector<std::string> argument_identifiers;
};

struct Import {
  std::string name;  // "java.util.Vector", or "java.util" for an on-demand import
  bool is_static = false;
  bool on_demand = false;
};

/// A parsed Java compilation unit (or a bare member/method snippet).
///
/// Supported: package/imports, classes, interfaces, enums, records, fields,
/// methods, constructors, initializers, all statement forms including
/// try-with-resources and switch (both label and arrow forms), lambdas,
/// method references, anonymous classes and generics. Lambda and anonymous
/// class bodies stay inside the enclosing method's contexts.
class JavaSource {
 public:
  /// Throws ParseError with the 1-based line/column of the offending token.
  static JavaSource parse(std::string text);

  const std::string& text() const noexcept { return text_; }
  const std::string& package_name() const noexcept { return package_; }
  const std::vector<Import>& imports() const noexcept { return imports_; }
  const std::set<std::string>& declared_types() const noexcept { return declared_types_; }
  bool declares_method(std::string_view name, std::size_t arity) const;

  /// Invocations ordered by the position of the method name.
  const std::vector<Invocation>& invocations() const noexcept { return invocations_; }
  const std::vector<HandlingContext>& contexts() const noexcept { return contexts_; }

  const Invocation* invocation_at(Span span) const;
  SourcePosition position_of(std::size_t offset) const;

 private:
  friend class JavaParser;

  std::string text_;
  std::string package_;
  std::vector<Import> imports_;
  std::set<std::string> declared_types_;
  std::set<std::pair<std::string, std::size_t>> declared_methods_;
  std::vector<Invocation> invocations_;
  std::vector<HandlingContext> contexts_;
  std::vector<std::size_t> line_starts_;
};

}  // namespace exguard
