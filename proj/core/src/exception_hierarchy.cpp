#include "exguard/exception_hierarchy.hpp"

#include <set>

#include "json.hpp"

#include "exguard/errors.hpp"

namespace exguard {

// Generated from core/data/exception_hierarchy.json.
extern const char* const kBuiltinHierarchyJson;

std::string_view simple_type_name(std::string_view name) {
  const auto dot = name.rfind('.');
  return dot == std::string_view::npos ? name : name.substr(dot + 1);
}

ExceptionHierarchy::ExceptionHierarchy() { index(); }

ExceptionHierarchy::ExceptionHierarchy(std::map<std::string, std::string> edges)
    : edges_(std::move(edges)) {
  validate();
  index();
}

const ExceptionHierarchy& ExceptionHierarchy::builtin() {
  static const ExceptionHierarchy instance = [] {
    const auto doc = nlohmann::json::parse(kBuiltinHierarchyJson);
    return ExceptionHierarchy(doc.get<std::map<std::string, std::string>>());
  }();
  return instance;
}

ExceptionHierarchy ExceptionHierarchy::merged(const std::map<std::string, std::string>& extra) const {
  auto edges = edges_;
  for (const auto& [sub, sup] : extra) edges[sub] = sup;
  return ExceptionHierarchy(std::move(edges));
}

void ExceptionHierarchy::validate() const {
  for (const auto& [sub, sup] : edges_) {
    if (sub.empty() || sup.empty()) {
      throw SchemaViolation("hierarchy edge with empty type name", sub + " -> " + sup);
    }
    if (sub == kRoot) {
      throw SchemaViolation("the root type cannot have a supertype", sub + " -> " + sup);
    }
    // Full traversal; a chain longer than the table size must contain a cycle.
    std::set<std::string_view> seen{sub};
    std::string_view cur = sup;
    while (cur != kRoot) {
      if (!seen.insert(cur).second) {
        throw SchemaViolation("cycle in exception hierarchy", sub + " -> " + sup);
      }
      const auto it = edges_.find(std::string(cur));
      if (it == edges_.end()) {
        throw SchemaViolation("supertype chain does not reach " + std::string(kRoot),
                              std::string(cur));
      }
      cur = it->second;
    }
  }
}

void ExceptionHierarchy::index() {
  by_simple_name_.clear();
  std::set<std::string> names{std::string(kRoot)};
  for (const auto& [sub, sup] : edges_) {
    names.insert(sub);
    names.insert(sup);
  }
  for (const auto& name : names) {
    if (name.find('.') == std::string::npos) continue;
    by_simple_name_[std::string(simple_type_name(name))].push_back(name);
  }
}

std::string ExceptionHierarchy::canonical(std::string_view name) const {
  if (name.find('.') != std::string_view::npos) return std::string(name);
  const auto it = by_simple_name_.find(name);
  if (it != by_simple_name_.end() && it->second.size() == 1) return it->second.front();
  return std::string(name);
}

bool ExceptionHierarchy::is_known(std::string_view name) const {
  const auto canon = canonical(name);
  return canon == kRoot || edges_.contains(canon);
}

bool ExceptionHierarchy::is_ambiguous(std::string_view simple_name) const {
  const auto it = by_simple_name_.find(simple_name);
  return it != by_simple_name_.end() && it->second.size() > 1;
}

std::vector<std::string> ExceptionHierarchy::lineage(std::string_view name) const {
  std::vector<std::string> chain{canonical(name)};
  while (chain.back() != kRoot) {
    const auto it = edges_.find(chain.back());
    chain.push_back(it == edges_.end() ? std::string(kRoot) : it->second);
  }
  return chain;
}

bool ExceptionHierarchy::is_subtype(std::string_view sub, std::string_view sup) const {
  const auto target = canonical(sup);
  for (const auto& t : lineage(sub)) {
    if (t == target) return true;
  }
  return false;
}

}  // namespace exguard
