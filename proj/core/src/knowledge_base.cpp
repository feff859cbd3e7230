#include "exguard/knowledge_base.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "exguard/errors.hpp"
#include "exguard/javadoc.hpp"
#include "text_util.hpp"

namespace exguard {

using nlohmann::json;
using nlohmann::ordered_json;

SignatureParts split_signature(std::string_view fqn) {
  const auto open = fqn.find('(');
  if (open == std::string_view::npos || fqn.empty() || fqn.back() != ')') {
    throw SchemaViolation("signature must look like Type.name(params)", std::string(fqn));
  }
  const auto head = detail::trim(fqn.substr(0, open));
  const auto dot = head.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == head.size()) {
    throw SchemaViolation("signature lacks a declaring type or method name", std::string(fqn));
  }
  SignatureParts parts;
  parts.declaring_type = std::string(head.substr(0, dot));
  parts.simple_name = std::string(head.substr(dot + 1));
  parts.arity = detail::split_top_level(fqn.substr(open + 1, fqn.size() - open - 2), ',').size();
  return parts;
}

ApiEntry make_entry(std::string fqn, std::vector<ExceptionSpec> specs) {
  const auto parts = split_signature(fqn);
  ApiEntry entry;
  entry.fqn = std::move(fqn);
  entry.simple_name = parts.simple_name;
  entry.arity = parts.arity;
  entry.declaring_type = parts.declaring_type;
  for (auto& spec : specs) {
    const bool dup = std::any_of(entry.specs.begin(), entry.specs.end(), [&](const ExceptionSpec& s) {
      return s.exception == spec.exception && s.condition == spec.condition;
    });
    if (!dup) entry.specs.push_back(std::move(spec));
  }
  return entry;
}

namespace {

ordered_json entry_record(const ApiEntry& e) {
  ordered_json specs = ordered_json::array();
  for (const auto& s : e.specs) {
    specs.push_back({{"exception", s.exception}, {"condition", s.condition}, {"guardable", s.guardable}});
  }
  return {{"fqn", e.fqn},
          {"simple_name", e.simple_name},
          {"arity", e.arity},
          {"declaring_type", e.declaring_type},
          {"specs", specs}};
}

void check_entry(const ApiEntry& e) {
  const auto record = [&] { return entry_record(e).dump(); };
  if (e.fqn.empty()) throw SchemaViolation("entry with empty fqn", record());
  SignatureParts parts;
  try {
    parts = split_signature(e.fqn);
  } catch (const SchemaViolation&) {
    throw SchemaViolation("entry fqn is not a method signature", record());
  }
  if (parts.simple_name != e.simple_name || parts.arity != e.arity ||
      parts.declaring_type != e.declaring_type) {
    throw SchemaViolation("simple_name/arity/declaring_type disagree with fqn", record());
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& s : e.specs) {
    if (s.exception.empty()) throw SchemaViolation("spec with empty exception", record());
    if (s.condition.empty() && s.guardable) {
      throw SchemaViolation("spec is guardable but has no condition", record());
    }
    if (!seen.emplace(s.exception, s.condition).second) {
      throw SchemaViolation("duplicate (exception, condition) pair", record());
    }
  }
}

}  // namespace

KnowledgeBase::KnowledgeBase() : hierarchy_(ExceptionHierarchy::builtin()) {}

KnowledgeBase::KnowledgeBase(std::vector<ApiEntry> entries, ExceptionHierarchy hierarchy,
                             std::map<std::string, Provenance> provenance)
    : hierarchy_(std::move(hierarchy)), provenance_(std::move(provenance)) {
  for (auto& e : entries) {
    check_entry(e);
    const auto key = e.fqn;
    if (entries_.contains(key)) throw SchemaViolation("duplicate fqn", entry_record(e).dump());
    by_name_.emplace(std::make_pair(e.simple_name, e.arity), key);
    entries_.emplace(key, std::move(e));
  }
  for (const auto& [fqn, prov] : provenance_) {
    if (!entries_.contains(fqn)) {
      throw SchemaViolation("provenance for unknown fqn", fqn);
    }
  }
}

const ApiEntry* KnowledgeBase::find(std::string_view fqn) const {
  const auto it = entries_.find(fqn);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<const ApiEntry*> KnowledgeBase::candidates(std::string_view simple_name,
                                                       std::size_t arity) const {
  std::vector<const ApiEntry*> out;
  const auto [lo, hi] = by_name_.equal_range({std::string(simple_name), arity});
  for (auto it = lo; it != hi; ++it) out.push_back(&entries_.find(it->second)->second);
  std::sort(out.begin(), out.end(), [](const ApiEntry* a, const ApiEntry* b) { return a->fqn < b->fqn; });
  return out;
}

std::size_t KnowledgeBase::spec_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.specs.size();
  return n;
}

std::vector<ExceptionSpec> kb_lookup(const KnowledgeBase& kb, std::string_view fqn) {
  const auto* entry = kb.find(fqn);
  return entry ? entry->specs : std::vector<ExceptionSpec>{};
}

// ---- serialization ----

std::string kb_to_json(const KnowledgeBase& kb) {
  ordered_json doc;
  doc["version"] = kKbFormatVersion;
  doc["entries"] = ordered_json::array();
  for (const auto& [_, e] : kb.entries()) doc["entries"].push_back(entry_record(e));
  doc["hierarchy"] = ordered_json::object();
  for (const auto& [sub, sup] : kb.hierarchy().edges()) doc["hierarchy"][sub] = sup;
  doc["provenance"] = ordered_json::object();
  for (const auto& [fqn, p] : kb.provenance()) {
    doc["provenance"][fqn] = {{"pages", p.pages}, {"notes", p.notes}};
  }
  return doc.dump(2) + "\n";
}

namespace {

template <typename T>
T field(const json& record, const char* name) {
  if (!record.is_object() || !record.contains(name)) {
    throw SchemaViolation(std::string("missing field '") + name + "'", record.dump());
  }
  const auto& v = record.at(name);
  const bool ok = [&] {
    if constexpr (std::is_same_v<T, std::string>) return v.is_string();
    else if constexpr (std::is_same_v<T, bool>) return v.is_boolean();
    else if constexpr (std::is_same_v<T, std::size_t>) return v.is_number_unsigned();
    else return true;
  }();
  if (!ok) throw SchemaViolation(std::string("field '") + name + "' has the wrong type", record.dump());
  return v.get<T>();
}

std::vector<std::string> string_list(const json& record, const char* name) {
  if (!record.contains(name)) return {};
  const auto& v = record.at(name);
  if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& s) { return s.is_string(); })) {
    throw SchemaViolation(std::string("field '") + name + "' must be a list of strings", record.dump());
  }
  return v.get<std::vector<std::string>>();
}

}  // namespace

KnowledgeBase kb_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaViolation("KB file is not valid JSON", e.what());
  }
  if (!doc.is_object()) throw SchemaViolation("KB document must be an object", doc.dump());
  if (!doc.contains("version") || !doc["version"].is_number_integer() ||
      doc["version"].get<int>() != kKbFormatVersion) {
    throw FormatVersionMismatch("expected KB format version " + std::to_string(kKbFormatVersion) +
                                ", found " + (doc.contains("version") ? doc["version"].dump() : "none"));
  }
  if (!doc.contains("entries") || !doc["entries"].is_array()) {
    throw SchemaViolation("'entries' must be a list", doc.value("entries", json()).dump());
  }
  std::vector<ApiEntry> entries;
  for (const auto& rec : doc["entries"]) {
    ApiEntry e;
    e.fqn = field<std::string>(rec, "fqn");
    e.simple_name = field<std::string>(rec, "simple_name");
    e.arity = field<std::size_t>(rec, "arity");
    e.declaring_type = field<std::string>(rec, "declaring_type");
    if (!rec.contains("specs") || !rec["specs"].is_array()) {
      throw SchemaViolation("'specs' must be a list", rec.dump());
    }
    for (const auto& s : rec["specs"]) {
      e.specs.push_back({field<std::string>(s, "exception"), field<std::string>(s, "condition"),
                         field<bool>(s, "guardable")});
    }
    entries.push_back(std::move(e));
  }

  if (!doc.contains("hierarchy") || !doc["hierarchy"].is_object()) {
    throw SchemaViolation("'hierarchy' must be an object", doc.value("hierarchy", json()).dump());
  }
  std::map<std::string, std::string> edges;
  for (const auto& [sub, sup] : doc["hierarchy"].items()) {
    if (!sup.is_string()) throw SchemaViolation("hierarchy values must be type names", sup.dump());
    edges[sub] = sup.get<std::string>();
  }

  std::map<std::string, Provenance> provenance;
  if (doc.contains("provenance")) {
    if (!doc["provenance"].is_object()) {
      throw SchemaViolation("'provenance' must be an object", doc["provenance"].dump());
    }
    for (const auto& [fqn, rec] : doc["provenance"].items()) {
      if (!rec.is_object()) throw SchemaViolation("provenance record must be an object", rec.dump());
      provenance[fqn] = {string_list(rec, "pages"), string_list(rec, "notes")};
    }
  }
  return KnowledgeBase(std::move(entries), ExceptionHierarchy(std::move(edges)), std::move(provenance));
}

void kb_save(const KnowledgeBase& kb, const std::filesystem::path& path) {
  detail::write_file_atomic(path, kb_to_json(kb));
}

KnowledgeBase kb_load(const std::filesystem::path& path) {
  return kb_from_json(detail::read_file(path));
}

// ---- building ----

KnowledgeBase build_knowledge_base(std::span<const PageInput> pages, const ExceptionHierarchy& hierarchy) {
  std::map<std::string, ApiEntry> merged;
  std::map<std::string, Provenance> provenance;

  for (const auto& page : pages) {
    std::vector<ApiEntry> entries;
    try {
      entries = parse_api_page(page.text);
    } catch (const PageStructureError& e) {
      throw PageStructureError(page.id + ": " + e.what());
    }
    for (auto& e : entries) {
      auto& prov = provenance[e.fqn];
      prov.pages.push_back(page.id);
      auto it = merged.find(e.fqn);
      if (it == merged.end()) {
        merged.emplace(e.fqn, std::move(e));
        continue;
      }
      prov.notes.push_back("declared on multiple pages; specs merged");
      auto specs = it->second.specs;
      specs.insert(specs.end(), e.specs.begin(), e.specs.end());
      it->second = make_entry(it->second.fqn, std::move(specs));
    }
  }

  std::map<std::pair<std::string, std::size_t>, std::vector<std::string>> overloads;
  for (const auto& [fqn, e] : merged) {
    overloads[{e.declaring_type + "." + e.simple_name, e.arity}].push_back(fqn);
    for (const auto& s : e.specs) {
      if (s.exception.find('.') == std::string::npos && hierarchy.is_ambiguous(s.exception)) {
        provenance[fqn].notes.push_back("ambiguous exception name '" + s.exception + "' kept simple");
      }
    }
  }
  for (const auto& [_, fqns] : overloads) {
    if (fqns.size() < 2) continue;
    for (const auto& fqn : fqns) {
      for (const auto& other : fqns) {
        if (other != fqn) provenance[fqn].notes.push_back("overload shares name and arity with " + other);
      }
    }
  }

  std::vector<ApiEntry> entries;
  for (auto& [_, e] : merged) entries.push_back(std::move(e));
  return KnowledgeBase(std::move(entries), hierarchy, std::move(provenance));
}

std::vector<Triple> to_triples(const ApiEntry& entry) {
  std::vector<Triple> out;
  for (const auto& s : entry.specs) {
    out.push_back({entry.fqn, "throw", s.exception});
    if (!s.condition.empty()) out.push_back({s.condition, "trigger", s.exception});
  }
  return out;
}

}  // namespace exguard
