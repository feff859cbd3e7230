#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace exguard {

/// Supertype table for Java exception types.
///
/// Keys and values are normally fully-qualified names. Lookups accept simple
/// names too: a simple name is canonicalized to the unique qualified name that
/// ends with it, and left as-is when it is unknown or ambiguous. Any type that
/// is not in the table is treated as a direct child of the root.
class ExceptionHierarchy {
 public:
  static constexpr std::string_view kRoot = "java.lang.Throwable";

  /// Only the root.
  ExceptionHierarchy();

  /// Throws SchemaViolation on a cycle or on a chain that does not reach the root.
  explicit ExceptionHierarchy(std::map<std::string, std::string> edges);

  /// The curated table of common java.lang / java.util / java.io / java.nio types.
  static const ExceptionHierarchy& builtin();

  /// A copy with `extra` edges added (overriding existing ones); re-validated.
  ExceptionHierarchy merged(const std::map<std::string, std::string>& extra) const;

  const std::map<std::string, std::string>& edges() const noexcept { return edges_; }

  std::string canonical(std::string_view name) const;
  bool is_known(std::string_view name) const;
  bool is_ambiguous(std::string_view simple_name) const;

  /// Supertype chain starting at the type itself and ending at the root.
  std::vector<std::string> lineage(std::string_view name) const;

  bool is_subtype(std::string_view sub, std::string_view sup) const;

  friend bool operator==(const ExceptionHierarchy& a, const ExceptionHierarchy& b) {
    return a.edges_ == b.edges_;
  }

 private:
  void validate() const;
  void index();

  std::map<std::string, std::string> edges_;
  std::map<std::string, std::vector<std::string>, std::less<>> by_simple_name_;
};

inline bool is_subtype(const ExceptionHierarchy& h, std::string_view sub, std::string_view sup) {
  return h.is_subtype(sub, sup);
}

/// Last dotted segment of a (possibly qualified) type name.
std::string_view simple_type_name(std::string_view name);

}  // namespace exguard
