#include "exguard/analysis.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

#include "exguard/errors.hpp"

namespace exguard {

namespace {

std::string strip_generics(std::string_view type) {
  std::string out;
  int depth = 0;
  for (char c : type) {
    if (c == '<') ++depth;
    else if (c == '>') --depth;
    else if (depth == 0 && c != ' ') out.push_back(c);
  }
  return out;
}

std::string_view package_of(std::string_view type) {
  const auto dot = type.rfind('.');
  return dot == std::string_view::npos ? std::string_view{} : type.substr(0, dot);
}

// Whether the source can refer to `declaring_type` by its simple name.
bool visible_by_simple_name(const JavaSource& src, std::string_view declaring_type) {
  const auto pkg = package_of(declaring_type);
  if (pkg == "java.lang" || pkg == src.package_name()) return true;
  for (const auto& imp : src.imports()) {
    if (imp.is_static) continue;
    if (imp.on_demand ? imp.name == pkg : imp.name == declaring_type) return true;
  }
  return false;
}

bool same_exception(const ExceptionHierarchy& h, std::string_view a, std::string_view b) {
  return h.canonical(strip_generics(a)) == h.canonical(strip_generics(b));
}

const Invocation& invocation_for(const JavaSource& src, const CallSite& call) {
  const auto* inv = src.invocation_at(call.span);
  if (!inv || inv->name != call.simple_name) {
    throw UnresolvedCall("call " + call.simple_name + " does not belong to the analyzed source");
  }
  return *inv;
}

struct Verdict {
  HandlingStatus status = HandlingStatus::Unhandled;
  int guard = -1;  // context index of the deciding guard
};

Verdict judge(const JavaSource& src, const Invocation& inv, const ExceptionSpec& spec, const ExceptionHierarchy& h) {
  bool exact = false, super = false, declared = false;
  int guard = -1;
  const auto& contexts = src.contexts();
  for (int c = inv.context; c >= 0; c = contexts[static_cast<std::size_t>(c)].parent) {
    const auto& ctx = contexts[static_cast<std::size_t>(c)];
    for (const auto& type : ctx.types) {
      switch (ctx.kind) {
        case HandlingContext::Kind::Guard:
          if (guard < 0 && same_exception(h, type, spec.exception)) guard = c;
          break;
        case HandlingContext::Kind::Try:
          if (same_exception(h, type, spec.exception)) exact = true;
          else if (h.is_subtype(strip_generics(spec.exception), strip_generics(type))) super = true;
          break;
        case HandlingContext::Kind::Method:
          if (h.is_subtype(strip_generics(spec.exception), strip_generics(type))) declared = true;
          break;
      }
    }
  }
  if (guard >= 0) return {HandlingStatus::GuardedThrow, guard};
  if (exact) return {HandlingStatus::CaughtExact};
  if (super) return {HandlingStatus::CaughtSupertype};
  if (declared) return {HandlingStatus::DeclaredThrows};
  return {};
}

}  // namespace

std::string_view to_string(HandlingStatus s) {
  switch (s) {
    case HandlingStatus::Unhandled: return "Unhandled";
    case HandlingStatus::GuardedThrow: return "GuardedThrow";
    case HandlingStatus::CaughtExact: return "CaughtExact";
    case HandlingStatus::CaughtSupertype: return "CaughtSupertype";
    case HandlingStatus::DeclaredThrows: return "DeclaredThrows";
  }
  return "?";
}

std::string_view to_string(QualityLabel q) {
  switch (q) {
    case QualityLabel::IncompleteExceptionHandling: return "IncompleteExceptionHandling";
    case QualityLabel::IncorrectExceptionHandling: return "IncorrectExceptionHandling";
    case QualityLabel::AbuseOfTryCatch: return "AbuseOfTryCatch";
    case QualityLabel::GoodPractice: return "GoodPractice";
  }
  return "?";
}

std::string_view to_string(Resolution::Kind k) {
  switch (k) {
    case Resolution::Kind::Unresolved: return "Unresolved";
    case Resolution::Kind::Resolved: return "Resolved";
    case Resolution::Kind::Ambiguous: return "Ambiguous";
  }
  return "?";
}

QualityLabel parse_quality_label(std::string_view name) {
  for (auto q : {QualityLabel::IncompleteExceptionHandling, QualityLabel::IncorrectExceptionHandling,
                 QualityLabel::AbuseOfTryCatch, QualityLabel::GoodPractice}) {
    if (to_string(q) == name) return q;
  }
  throw Error("unknown quality label '" + std::string(name) + "'");
}

std::vector<CallSite> extract_invocations(const JavaSource& source) {
  std::vector<CallSite> out;
  out.reserve(source.invocations().size());
  for (const auto& inv : source.invocations()) {
    CallSite c;
    c.simple_name = inv.name;
    c.arity = inv.arity;
    c.receiver_hint = inv.receiver_hint;
    c.span = inv.span;
    c.position = inv.position;
    c.qualified = inv.span.begin != inv.name_offset;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CallSite> extract_invocations(std::string_view source) {
  return extract_invocations(JavaSource::parse(std::string(source)));
}

CallSite resolve(const CallSite& call, const JavaSource& source, const KnowledgeBase& kb) {
  CallSite out = call;
  out.resolution = Resolution::unresolved();
  auto candidates = kb.candidates(call.simple_name, call.arity);
  if (candidates.empty()) return out;
  if (!call.qualified && source.declares_method(call.simple_name, call.arity)) return out;

  std::vector<const ApiEntry*> kept;
  const auto hint = strip_generics(call.receiver_hint);
  if (!hint.empty()) {
    if (hint.find('.') != std::string::npos) {
      for (const auto* e : candidates) {
        if (e->declaring_type == hint) kept.push_back(e);
      }
      // A nested type written relative to an import, e.g. Map.Entry.
      if (kept.empty()) {
        for (const auto* e : candidates) {
          const auto& dt = e->declaring_type;
          if (dt.size() > hint.size() && dt.compare(dt.size() - hint.size(), hint.size(), hint) == 0 &&
              dt[dt.size() - hint.size() - 1] == '.') {
            kept.push_back(e);
          }
        }
      }
    } else {
      std::vector<const ApiEntry*> named;
      for (const auto* e : candidates) {
        if (simple_type_name(e->declaring_type) == hint) named.push_back(e);
      }
      for (const auto* e : named) {
        if (visible_by_simple_name(source, e->declaring_type)) kept.push_back(e);
      }
      if (kept.empty()) kept = std::move(named);
    }
  } else {
    for (const auto* e : candidates) {
      if (visible_by_simple_name(source, e->declaring_type)) kept.push_back(e);
    }
    if (kept.empty()) kept = std::move(candidates);
  }

  if (kept.size() == 1) {
    out.resolution = Resolution::resolved(kept.front()->fqn);
  } else if (kept.size() > 1) {
    std::vector<std::string> fqns;
    for (const auto* e : kept) fqns.push_back(e->fqn);
    out.resolution = Resolution::ambiguous(std::move(fqns));
  }
  return out;
}

std::vector<CallSite> resolve_all(const JavaSource& source, const KnowledgeBase& kb) {
  auto calls = extract_invocations(source);
  for (auto& c : calls) c = resolve(c, source, kb);
  return calls;
}

HandlingStatus detect_handling(const JavaSource& source, const CallSite& call, const ExceptionSpec& spec,
                               const ExceptionHierarchy& h) {
  if (!call.resolution.is_resolved()) {
    throw UnresolvedCall("call " + call.simple_name + " is " + std::string(to_string(call.resolution.kind)));
  }
  return judge(source, invocation_for(source, call), spec, h).status;
}

std::vector<UnhandledException> collect_unhandled(const JavaSource& source, const KnowledgeBase& kb) {
  std::vector<UnhandledException> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& call : resolve_all(source, kb)) {
    if (!call.resolution.is_resolved()) continue;
    const auto& fqn = call.resolution.fqn();
    for (const auto& spec : kb_lookup(kb, fqn)) {
      if (detect_handling(source, call, spec, kb.hierarchy()) != HandlingStatus::Unhandled) continue;
      if (seen.insert({fqn, spec.exception}).second) out.push_back({fqn, spec.exception, spec.condition});
    }
  }
  return out;
}

std::vector<UnhandledException> collect_unhandled(std::string_view source, const KnowledgeBase& kb) {
  return collect_unhandled(JavaSource::parse(std::string(source)), kb);
}

AnalysisReport analyze(const JavaSource& source, const KnowledgeBase& kb) {
  AnalysisReport r;
  const auto& h = kb.hierarchy();
  std::set<std::pair<std::string, std::string>> seen;
  bool relevant = false, unhandled = false, super = false, abuse = false;

  for (auto& call : resolve_all(source, kb)) {
    if (call.resolution.kind == Resolution::Kind::Ambiguous) {
      r.ambiguous.push_back(call);
      continue;
    }
    if (call.resolution.kind == Resolution::Kind::Unresolved) {
      r.unresolved.push_back(call);
      continue;
    }
    const auto& fqn = call.resolution.fqn();
    const auto& inv = invocation_for(source, call);
    for (const auto& spec : kb_lookup(kb, fqn)) {
      relevant = true;
      const auto v = judge(source, inv, spec, h);
      r.statuses.push_back({fqn, spec.exception, v.status, call.span});
      switch (v.status) {
        case HandlingStatus::Unhandled:
          unhandled = true;
          if (seen.insert({fqn, spec.exception}).second) r.unhandled.push_back({fqn, spec.exception, spec.condition});
          break;
        case HandlingStatus::CaughtSupertype:
          super = true;
          break;
        case HandlingStatus::CaughtExact:
          if (spec.guardable) abuse = true;
          break;
        case HandlingStatus::GuardedThrow: {
          const auto& g = source.contexts()[static_cast<std::size_t>(v.guard)];
          const bool overlap =
              inv.argument_identifiers.empty() ||
              std::any_of(inv.argument_identifiers.begin(), inv.argument_identifiers.end(), [&](const auto& id) {
                return std::find(g.condition_identifiers.begin(), g.condition_identifiers.end(), id) !=
                       g.condition_identifiers.end();
              });
          if (!overlap) {
            r.warnings.push_back("guard at line " + std::to_string(g.line) + " does not test the arguments of " +
                                 call.simple_name + " at " + std::to_string(call.position.line) + ":" +
                                 std::to_string(call.position.column));
          }
          break;
        }
        case HandlingStatus::DeclaredThrows:
          break;
      }
    }
  }
  if (relevant) {
    if (unhandled) r.label = QualityLabel::IncompleteExceptionHandling;
    else if (super) r.label = QualityLabel::IncorrectExceptionHandling;
    else if (abuse) r.label = QualityLabel::AbuseOfTryCatch;
    else r.label = QualityLabel::GoodPractice;
  }
  return r;
}

QualityLabel classify_quality(const JavaSource& source, const KnowledgeBase& kb) {
  const auto r = analyze(source, kb);
  if (!r.label) throw NoRelevantApis("no resolved call has documented exceptions");
  return *r.label;
}

QualityLabel classify_quality(std::string_view source, const KnowledgeBase& kb) {
  return classify_quality(JavaSource::parse(std::string(source)), kb);
}

std::string report_to_json(const AnalysisReport& report) {
  using nlohmann::ordered_json;
  auto site = [](const CallSite& c) {
    ordered_json j;
    j["name"] = c.simple_name;
    j["arity"] = c.arity;
    j["line"] = c.position.line;
    j["column"] = c.position.column;
    j["span"] = {c.span.begin, c.span.end};
    if (c.resolution.kind == Resolution::Kind::Ambiguous) j["candidates"] = c.resolution.fqns;
    return j;
  };
  ordered_json j;
  j["label"] = report.label ? ordered_json(std::string(to_string(*report.label))) : ordered_json(nullptr);
  j["unhandled"] = ordered_json::array();
  for (const auto& u : report.unhandled) {
    j["unhandled"].push_back({{"fqn", u.fqn}, {"exception", u.exception}, {"condition", u.condition}});
  }
  j["statuses"] = ordered_json::array();
  for (const auto& s : report.statuses) {
    j["statuses"].push_back({{"fqn", s.fqn},
                             {"exception", s.exception},
                             {"status", std::string(to_string(s.status))},
                             {"span", {s.span.begin, s.span.end}}});
  }
  j["ambiguous"] = ordered_json::array();
  for (const auto& c : report.ambiguous) j["ambiguous"].push_back(site(c));
  j["unresolved"] = ordered_json::array();
  for (const auto& c : report.unresolved) j["unresolved"].push_back(site(c));
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

}  // namespace exguard
