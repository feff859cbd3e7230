#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exguard/java_source.hpp"
#include "exguard/knowledge_base.hpp"

namespace exguard {

struct Resolution {
  enum class Kind { Unresolved, Resolved, Ambiguous };

  Kind kind = Kind::Unresolved;
  std::vector<std::string> fqns;  // one for Resolved, all candidates for Ambiguous

  static Resolution unresolved() { return {}; }
  static Resolution resolved(std::string fqn) { return {Kind::Resolved, {std::move(fqn)}}; }
  static Resolution ambiguous(std::vector<std::string> fqns) { return {Kind::Ambiguous, std::move(fqns)}; }

  bool is_resolved() const noexcept { return kind == Kind::Resolved; }
  const std::string& fqn() const { return fqns.at(0); }

  friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct CallSite {
  std::string simple_name;
  std::size_t arity = 0;
  std::string receiver_hint;
  Span span;
  SourcePosition position;
  bool qualified = false;  // has an explicit receiver expression
  Resolution resolution;
};

enum class HandlingStatus { Unhandled, GuardedThrow, CaughtExact, CaughtSupertype, DeclaredThrows };

enum class QualityLabel { IncompleteExceptionHandling, IncorrectExceptionHandling, AbuseOfTryCatch, GoodPractice };

struct UnhandledException {
  std::string fqn;
  std::string exception;
  std::string condition;

  friend bool operator==(const UnhandledException&, const UnhandledException&) = default;
};

std::string_view to_string(HandlingStatus s);
std::string_view to_string(QualityLabel q);
std::string_view to_string(Resolution::Kind k);
/// Throws Error for an unknown name.
QualityLabel parse_quality_label(std::string_view name);

/// Every method invocation in source order; constructor calls are excluded.
std::vector<CallSite> extract_invocations(const JavaSource& source);
/// Parses first; throws ParseError.
std::vector<CallSite> extract_invocations(std::string_view source);

/// Matches the call against KB entries by simple name and arity, narrowed by
/// the receiver's declared type and the source's imports.
CallSite resolve(const CallSite& call, const JavaSource& source, const KnowledgeBase& kb);

std::vector<CallSite> resolve_all(const JavaSource& source, const KnowledgeBase& kb);

/// Throws UnresolvedCall when the call is not Resolved or does not belong to `source`.
HandlingStatus detect_handling(const JavaSource& source, const CallSite& call, const ExceptionSpec& spec,
                               const ExceptionHierarchy& h);

std::vector<UnhandledException> collect_unhandled(const JavaSource& source, const KnowledgeBase& kb);
std::vector<UnhandledException> collect_unhandled(std::string_view source, const KnowledgeBase& kb);

/// Throws NoRelevantApis when no Resolved call has KB specs.
QualityLabel classify_quality(const JavaSource& source, const KnowledgeBase& kb);
QualityLabel classify_quality(std::string_view source, const KnowledgeBase& kb);

struct StatusRecord {
  std::string fqn;
  std::string exception;
  HandlingStatus status = HandlingStatus::Unhandled;
  Span span;
};

struct AnalysisReport {
  std::optional<QualityLabel> label;  // empty when no relevant API is used
  std::vector<UnhandledException> unhandled;
  std::vector<StatusRecord> statuses;
  std::vector<CallSite> ambiguous;
  std::vector<CallSite> unresolved;
  std::vector<std::string> warnings;
};

AnalysisReport analyze(const JavaSource& source, const KnowledgeBase& kb);

/// {label, unhandled, statuses, ambiguous, unresolved, warnings}; label is null
/// when no relevant API is used.
std::string report_to_json(const AnalysisReport& report);

}  // namespace exguard
