#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exguard/exception_hierarchy.hpp"

namespace exguard {

/// One `<exception, condition>` pair taken from a "Throws:" clause.
struct ExceptionSpec {
  std::string exception;
  std::string condition;  // verbatim, may be empty
  bool guardable = false;  // condition states a checkable precondition

  friend bool operator==(const ExceptionSpec&, const ExceptionSpec&) = default;
};

struct ApiEntry {
  std::string fqn;  // e.g. "java.util.Vector.get(int index)"
  std::string simple_name;
  std::size_t arity = 0;
  std::string declaring_type;
  std::vector<ExceptionSpec> specs;

  friend bool operator==(const ApiEntry&, const ApiEntry&) = default;
};

struct Provenance {
  std::vector<std::string> pages;
  std::vector<std::string> notes;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Parts of a method signature string "pkg.Type.name(T1 a, T2 b)".
struct SignatureParts {
  std::string declaring_type;
  std::string simple_name;
  std::size_t arity = 0;
};

/// Throws SchemaViolation when `fqn` is not of the form "Type.name(params)".
SignatureParts split_signature(std::string_view fqn);

/// Builds an entry from a signature, deriving name/arity/type and deduplicating specs.
ApiEntry make_entry(std::string fqn, std::vector<ExceptionSpec> specs);

/// Immutable API exception-knowledge base.
class KnowledgeBase {
 public:
  KnowledgeBase();

  /// Throws SchemaViolation on duplicate fqn or an inconsistent entry.
  KnowledgeBase(std::vector<ApiEntry> entries, ExceptionHierarchy hierarchy,
                std::map<std::string, Provenance> provenance = {});

  const std::map<std::string, ApiEntry, std::less<>>& entries() const noexcept { return entries_; }
  const ExceptionHierarchy& hierarchy() const noexcept { return hierarchy_; }
  const std::map<std::string, Provenance>& provenance() const noexcept { return provenance_; }

  const ApiEntry* find(std::string_view fqn) const;

  /// Entries whose simple name and arity match, in fqn order.
  std::vector<const ApiEntry*> candidates(std::string_view simple_name, std::size_t arity) const;

  std::size_t spec_count() const;

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.entries_ == b.entries_ && a.hierarchy_ == b.hierarchy_ &&
           a.provenance_ == b.provenance_;
  }

 private:
  std::map<std::string, ApiEntry, std::less<>> entries_;
  ExceptionHierarchy hierarchy_;
  std::map<std::string, Provenance> provenance_;
  std::multimap<std::pair<std::string, std::size_t>, std::string> by_name_;
};

/// Specs of the entry with this fqn, or an empty list.
std::vector<ExceptionSpec> kb_lookup(const KnowledgeBase& kb, std::string_view fqn);

// ---- KB file (versioned JSON) ----

inline constexpr int kKbFormatVersion = 1;

std::string kb_to_json(const KnowledgeBase& kb);

/// Throws FormatVersionMismatch or SchemaViolation.
KnowledgeBase kb_from_json(std::string_view text);

/// Writes atomically (temporary file then rename).
void kb_save(const KnowledgeBase& kb, const std::filesystem::path& path);
KnowledgeBase kb_load(const std::filesystem::path& path);

// ---- building from documentation pages ----

struct PageInput {
  std::string id;  // provenance identifier, usually the file name
  std::string text;
};

/// Parses every page and merges the entries. Same-fqn declarations on several
/// pages are merged and noted in provenance. Propagates PageStructureError.
KnowledgeBase build_knowledge_base(std::span<const PageInput> pages,
                                   const ExceptionHierarchy& hierarchy = ExceptionHierarchy::builtin());

/// Triples in the documentation knowledge schema: <api, throw, exception> and
/// <condition, trigger, exception> (the latter only for non-empty conditions).
struct Triple {
  std::string subject;
  std::string relation;
  std::string object;

  friend bool operator==(const Triple&, const Triple&) = default;
};

std::vector<Triple> to_triples(const ApiEntry& entry);

}  // namespace exguard
