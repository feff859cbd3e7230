#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exguard/errors.hpp"
#include "exguard/java_source.hpp"
#include "java_lexer.hpp"

namespace exguard {

using detail::Token;
using detail::TokenKind;

namespace {

constexpr std::string_view kPrimitives[] = {"boolean", "byte", "char", "short", "int", "long", "float", "double"};

bool is_primitive(const Token& t) {
  return t.kind == TokenKind::Keyword &&
         std::find(std::begin(kPrimitives), std::end(kPrimitives), t.text) != std::end(kPrimitives);
}

bool is_modifier(const Token& t) {
  static constexpr std::string_view mods[] = {"public",   "private",   "protected",    "static",
                                              "final",    "abstract",  "native",       "synchronized",
                                              "transient", "volatile", "strictfp",     "default"};
  return t.kind == TokenKind::Keyword && std::find(std::begin(mods), std::end(mods), t.text) != std::end(mods);
}

bool starts_upper(std::string_view s) { return !s.empty() && s.front() >= 'A' && s.front() <= 'Z'; }

std::string strip_type_args(std::string_view type) {
  std::string out;
  int depth = 0;
  for (char c : type) {
    if (c == '<') ++depth;
    else if (c == '>') --depth;
    else if (depth == 0) out.push_back(c);
  }
  return out;
}

constexpr std::size_t kNpos = static_cast<std::size_t>(-1);
constexpr int kMaxDepth = 1500;

}  // namespace

class JavaParser {
 public:
  JavaParser(JavaSource& out) : out_(out) {
    out_.line_starts_ = detail::compute_line_starts(out_.text_);
    toks_ = detail::tokenize(out_.text_, out_.line_starts_);
  }

  void run() {
    compilation_unit();
    resolve_pending();
    std::stable_sort(out_.invocations_.begin(), out_.invocations_.end(),
                     [](const Invocation& a, const Invocation& b) { return a.name_offset < b.name_offset; });
  }

 private:
  struct Sink {
    std::vector<std::string> items;
    bool barrier = false;
  };

  struct Pending {
    std::size_t invocation;
    std::string name;
    bool fields_only;
  };

  // Name chain state for `a.b.c` prefixes of a postfix expression.
  struct Chain {
    std::vector<std::string> names;
    bool this_prefixed = false;
    bool active = false;
  };

  // ---------------------------------------------------------------- tokens

  const Token& tok(std::size_t k = 0) const {
    const auto i = std::min(pos_ + k, toks_.size() - 1);
    return toks_[i];
  }
  const Token& at(std::size_t p) const { return toks_[std::min(p, toks_.size() - 1)]; }
  bool is(std::string_view s, std::size_t k = 0) const { return tok(k).is(s); }
  bool is_ident(std::size_t k = 0) const { return tok(k).kind == TokenKind::Identifier; }
  bool is_ident_text(std::string_view s, std::size_t k = 0) const {
    return tok(k).kind == TokenKind::Identifier && tok(k).text == s;
  }
  bool adjacent(std::size_t k) const { return tok(k).offset == tok(k - 1).end(); }

  [[noreturn]] void fail(const std::string& msg, const Token& t) const {
    const auto p = out_.position_of(t.offset);
    throw ParseError(msg, p.line, p.column);
  }
  [[noreturn]] void unexpected(std::string_view expected) const {
    const auto& t = tok();
    std::string found = t.kind == TokenKind::End ? std::string("end of input") : "'" + std::string(t.text) + "'";
    fail("expected " + std::string(expected) + ", found " + found, t);
  }

  const Token& expect(std::string_view s) {
    if (!is(s)) unexpected("'" + std::string(s) + "'");
    return toks_[pos_++];
  }
  bool accept(std::string_view s) {
    if (!is(s)) return false;
    ++pos_;
    return true;
  }
  std::string ident() {
    if (!is_ident()) unexpected("identifier");
    return std::string(toks_[pos_++].text);
  }

  std::size_t line_of(const Token& t) const { return out_.position_of(t.offset).line; }

  struct DepthGuard {
    JavaParser& p;
    explicit DepthGuard(JavaParser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) p.fail("nesting too deep", p.tok());
    }
    ~DepthGuard() { --p.depth_; }
  };

  // ---------------------------------------------------------------- scopes and sinks

  void push_scope() { scopes_.emplace_back(); }
  void pop_scope() { scopes_.pop_back(); }
  void declare(const std::string& name, std::string type) {
    if (!scopes_.empty()) scopes_.back()[name] = std::move(type);
  }
  std::optional<std::string> lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (auto f = it->find(name); f != it->end()) return f->second;
    }
    return std::nullopt;
  }

  static void record(std::vector<Sink>& sinks, const std::string& item) {
    for (auto it = sinks.rbegin(); it != sinks.rend(); ++it) {
      if (it->barrier) break;
      if (std::find(it->items.begin(), it->items.end(), item) == it->items.end()) it->items.push_back(item);
    }
  }
  static std::vector<std::string> pop_sink(std::vector<Sink>& sinks) {
    auto items = std::move(sinks.back().items);
    sinks.pop_back();
    return items;
  }

  int new_context(HandlingContext::Kind kind, std::size_t line, std::vector<std::string> types = {},
                  std::vector<std::string> cond = {}) {
    HandlingContext c;
    c.kind = kind;
    c.parent = ctx_;
    c.types = std::move(types);
    c.condition_identifiers = std::move(cond);
    c.line = line;
    out_.contexts_.push_back(std::move(c));
    return static_cast<int>(out_.contexts_.size() - 1);
  }

  // ---------------------------------------------------------------- types

  void skip_annotation() {
    expect("@");
    ident();
    while (is(".") && tok(1).kind == TokenKind::Identifier) pos_ += 2;
    if (is("(")) skip_balanced("(", ")");
  }

  void skip_balanced(std::string_view open, std::string_view close) {
    const auto& start = tok();
    expect(open);
    int depth = 1;
    while (depth > 0) {
      if (tok().kind == TokenKind::End) fail("unbalanced '" + std::string(open) + "'", start);
      if (is(open)) ++depth;
      else if (is(close)) --depth;
      ++pos_;
    }
  }

  // Speculative type scan. Returns the position after the type or kNpos.
  std::size_t scan_type(std::size_t p) const {
    while (at(p).is("@")) {
      if (at(p + 1).kind != TokenKind::Identifier) return kNpos;
      p += 2;
      while (at(p).is(".") && at(p + 1).kind == TokenKind::Identifier) p += 2;
      if (at(p).is("(")) {
        int depth = 0;
        do {
          if (at(p).kind == TokenKind::End) return kNpos;
          if (at(p).is("(")) ++depth;
          else if (at(p).is(")")) --depth;
          ++p;
        } while (depth > 0);
      }
    }
    if (is_primitive(at(p))) {
      ++p;
    } else if (at(p).kind == TokenKind::Identifier) {
      ++p;
      if (at(p).is("<")) {
        p = scan_type_args(p);
        if (p == kNpos) return kNpos;
      }
      while (at(p).is(".") && at(p + 1).kind == TokenKind::Identifier) {
        p += 2;
        if (at(p).is("<")) {
          p = scan_type_args(p);
          if (p == kNpos) return kNpos;
        }
      }
    } else {
      return kNpos;
    }
    while (at(p).is("[") && at(p + 1).is("]")) p += 2;
    return p;
  }

  std::size_t scan_type_args(std::size_t p) const {
    ++p;  // '<'
    if (at(p).is(">")) return p + 1;
    while (true) {
      while (at(p).is("@")) {
        p += 2;
        while (at(p).is(".") && at(p + 1).kind == TokenKind::Identifier) p += 2;
      }
      if (at(p).is("?")) {
        ++p;
        if (at(p).is("extends") || at(p).is("super")) {
          p = scan_type(p + 1);
          if (p == kNpos) return kNpos;
        }
      } else {
        p = scan_type(p);
        if (p == kNpos) return kNpos;
      }
      while (at(p).is("&")) {
        p = scan_type(p + 1);
        if (p == kNpos) return kNpos;
      }
      if (at(p).is(",")) {
        ++p;
        continue;
      }
      if (at(p).is(">")) return p + 1;
      return kNpos;
    }
  }

  std::string text_of(std::size_t from, std::size_t to) const {
    std::string s;
    for (std::size_t p = from; p < to; ++p) {
      const auto& t = at(p);
      const bool wordish = t.kind == TokenKind::Identifier || t.kind == TokenKind::Keyword;
      if (!s.empty() && wordish) {
        const auto& prev = at(p - 1);
        if (prev.kind == TokenKind::Identifier || prev.kind == TokenKind::Keyword || prev.is("?")) s.push_back(' ');
      }
      s.append(t.text);
    }
    return s;
  }

  std::string type() {
    const auto start = pos_;
    const auto end = scan_type(pos_);
    if (end == kNpos) unexpected("type");
    pos_ = end;
    return text_of(start, end);
  }

  void skip_type_params() {
    if (is("<")) skip_balanced("<", ">");
  }

  std::vector<std::string> type_list() {
    std::vector<std::string> types;
    do {
      types.push_back(strip_type_args(type()));
    } while (accept(","));
    return types;
  }

  // ---------------------------------------------------------------- compilation unit

  void compilation_unit() {
    if (is("package") || (is("@") && package_ahead())) {
      while (is("@")) skip_annotation();
      expect("package");
      out_.package_ = qualified_name();
      expect(";");
    }
    while (is("import")) {
      ++pos_;
      Import imp;
      imp.is_static = accept("static");
      std::string name = ident();
      while (accept(".")) {
        if (accept("*")) {
          imp.on_demand = true;
          break;
        }
        name += "." + ident();
      }
      imp.name = std::move(name);
      expect(";");
      out_.imports_.push_back(std::move(imp));
    }
    push_scope();
    while (tok().kind != TokenKind::End) {
      if (accept(";")) continue;
      member(true);
    }
    pop_scope();
  }

  bool package_ahead() const {
    std::size_t p = pos_;
    while (at(p).is("@")) {
      p += 2;
      while (at(p).is(".")) p += 2;
      if (at(p).is("(")) {
        int depth = 0;
        do {
          if (at(p).kind == TokenKind::End) return false;
          if (at(p).is("(")) ++depth;
          else if (at(p).is(")")) --depth;
          ++p;
        } while (depth > 0);
      }
    }
    return at(p).is("package");
  }

  std::string qualified_name() {
    std::string name = ident();
    while (is(".") && tok(1).kind == TokenKind::Identifier) {
      ++pos_;
      name += "." + ident();
    }
    return name;
  }

  void modifiers() {
    while (true) {
      if (is_modifier(tok())) {
        ++pos_;
      } else if (is("@") && !is("interface", 1)) {
        skip_annotation();
      } else if (is_ident_text("sealed") && (is_type_keyword(1) || is_modifier(tok(1)))) {
        ++pos_;
      } else if (is_ident_text("non") && is("-", 1) && is_ident_text("sealed", 2)) {
        pos_ += 3;
      } else {
        return;
      }
    }
  }

  bool is_type_keyword(std::size_t k = 0) const {
    return is("class", k) || is("interface", k) || is("enum", k) || (is("@", k) && is("interface", k + 1)) ||
           (is_ident_text("record", k) && tok(k + 1).kind == TokenKind::Identifier &&
            (is("(", k + 2) || is("<", k + 2)));
  }

  // Class-body member, or a top-level member when `top` (bare snippets are accepted).
  void member(bool top) {
    DepthGuard guard(*this);
    if (accept(";")) return;
    if (is("{") || (is("static") && is("{", 1))) {
      accept("static");
      method_like_body({}, line_of(tok()));
      return;
    }
    modifiers();
    if (is_type_keyword()) {
      type_declaration();
      return;
    }
    (void)top;
    skip_type_params();
    // Constructor (or compact record constructor).
    if (is_ident() && (is("(", 1) || (is("{", 1) && in_record_))) {
      const auto& name_tok = tok();
      const auto name = ident();
      push_scope();
      std::size_t arity = 0;
      if (is("(")) arity = parameters();
      std::vector<std::string> throws;
      if (accept("throws")) throws = type_list();
      out_.declared_methods_.insert({name, arity});
      method_like_body(std::move(throws), line_of(name_tok));
      pop_scope();
      return;
    }
    std::string t;
    if (is("void")) {
      ++pos_;
      t = "void";
    } else {
      t = type();
    }
    const auto& name_tok = tok();
    const auto name = ident();
    if (is("(")) {
      push_scope();
      const auto arity = parameters();
      while (is("[") && is("]", 1)) pos_ += 2;
      std::vector<std::string> throws;
      if (accept("throws")) throws = type_list();
      out_.declared_methods_.insert({name, arity});
      if (accept("default")) {
        element_value();
        expect(";");
      } else if (!accept(";")) {
        method_like_body(std::move(throws), line_of(name_tok));
      }
      pop_scope();
      return;
    }
    // Field declarators.
    field_declarator(name, t);
    while (accept(",")) field_declarator(ident(), t);
    expect(";");
  }

  void field_declarator(const std::string& name, const std::string& t) {
    std::string ft = t;
    while (is("[") && is("]", 1)) {
      pos_ += 2;
      ft += "[]";
    }
    if (accept("=")) {
      // Field initializers run with no enclosing handler.
      const int saved = ctx_;
      ctx_ = new_context(HandlingContext::Kind::Method, line_of(tok()));
      const auto init = variable_initializer();
      ctx_ = saved;
      if (ft == "var" && !init.empty()) ft = init;
    }
    fields_[name] = ft;
  }

  void element_value() {
    if (is("@")) {
      skip_annotation();
    } else if (is("{")) {
      skip_balanced("{", "}");
    } else {
      expression();
    }
  }

  void method_like_body(std::vector<std::string> throws, std::size_t line) {
    const int saved = ctx_;
    ctx_ = new_context(HandlingContext::Kind::Method, line, std::move(throws));
    throw_sinks_.push_back({{}, true});
    block();
    throw_sinks_.pop_back();
    ctx_ = saved;
  }

  std::size_t parameters() {
    expect("(");
    std::size_t arity = 0;
    if (accept(")")) return 0;
    do {
      modifiers();
      auto t = type();
      if (accept("...")) t += "[]";
      // Receiver parameter `Foo this`.
      if (accept("this")) continue;
      if (is_ident() && is(".", 1) && is("this", 2)) {
        pos_ += 3;
        continue;
      }
      const auto name = ident();
      while (is("[") && is("]", 1)) {
        pos_ += 2;
        t += "[]";
      }
      declare(name, t);
      ++arity;
    } while (accept(","));
    expect(")");
    return arity;
  }

  void type_declaration() {
    DepthGuard guard(*this);
    const bool annotation = is("@");
    if (annotation) pos_ += 2;
    const bool is_enum = is("enum");
    const bool is_record = is_ident_text("record");
    ++pos_;
    const auto name = ident();
    out_.declared_types_.insert(name);
    skip_type_params();
    std::map<std::string, std::string> components;
    if (is_record) {
      push_scope();
      parameters();
      components = scopes_.back();
      pop_scope();
    }
    while (!is("{")) {
      if (tok().kind == TokenKind::End) unexpected("'{'");
      if (is("<")) {
        skip_balanced("<", ">");
      } else {
        ++pos_;
      }
    }
    for (auto& [n, t] : components) fields_[n] = t;
    class_body(is_enum, is_record);
  }

  void class_body(bool is_enum, bool is_record) {
    const bool saved_record = in_record_;
    in_record_ = is_record;
    expect("{");
    if (is_enum) enum_constants();
    while (!is("}")) {
      if (tok().kind == TokenKind::End) unexpected("'}'");
      member(false);
    }
    expect("}");
    in_record_ = saved_record;
  }

  void enum_constants() {
    while (is_ident() || is("@")) {
      while (is("@")) skip_annotation();
      ident();
      if (is("(")) {
        const int saved = ctx_;
        ctx_ = new_context(HandlingContext::Kind::Method, line_of(tok()));
        arguments(nullptr);
        ctx_ = saved;
      }
      if (is("{")) anonymous_body();
      if (!accept(",")) break;
    }
    accept(";");
  }

  void anonymous_body() {
    throw_sinks_.push_back({{}, true});
    push_scope();
    class_body(false, false);
    pop_scope();
    throw_sinks_.pop_back();
  }

  // ---------------------------------------------------------------- statements

  void block() {
    DepthGuard guard(*this);
    expect("{");
    push_scope();
    const int saved = ctx_;
    while (!is("}")) {
      if (tok().kind == TokenKind::End) unexpected("'}'");
      block_statement();
    }
    ctx_ = saved;
    pop_scope();
    expect("}");
  }

  // Parses one statement of a block. A preceding if-statement that throws
  // guards the rest of the block.
  void block_statement() {
    std::vector<std::string> cond;
    auto thrown = statement(&cond);
    if (!thrown.empty()) {
      ctx_ = new_context(HandlingContext::Kind::Guard, line_of(at(pos_ - 1)), std::move(thrown), std::move(cond));
    }
  }

  bool local_declaration_ahead() const {
    if (is("final") || is("@")) return true;
    const auto end = scan_type(pos_);
    if (end == kNpos) return false;
    if (at(end).kind != TokenKind::Identifier) return false;
    const auto& after = at(end + 1);
    return after.is("=") || after.is(";") || after.is(",") || after.is("[") || after.is(":");
  }

  // Returns the exception types an if-statement throws (empty for other statements).
  std::vector<std::string> statement(std::vector<std::string>* cond_out = nullptr) {
    DepthGuard guard(*this);
    const auto& t = tok();
    if (is("{")) {
      block();
      return {};
    }
    if (accept(";")) return {};
    if (is("if")) return if_statement(cond_out);
    if (is("try")) {
      try_statement();
      return {};
    }
    if (accept("while")) {
      expect("(");
      expression();
      expect(")");
      statement();
      return {};
    }
    if (accept("do")) {
      statement();
      expect("while");
      expect("(");
      expression();
      expect(")");
      expect(";");
      return {};
    }
    if (is("for")) {
      for_statement();
      return {};
    }
    if (is("switch")) {
      switch_construct();
      return {};
    }
    if (accept("return")) {
      if (!is(";")) expression();
      expect(";");
      return {};
    }
    if (accept("throw")) {
      throw_statement();
      return {};
    }
    if (is("break") || is("continue")) {
      ++pos_;
      if (is_ident()) ++pos_;
      expect(";");
      return {};
    }
    if (accept("synchronized")) {
      expect("(");
      expression();
      expect(")");
      block();
      return {};
    }
    if (accept("assert")) {
      expression();
      if (accept(":")) expression();
      expect(";");
      return {};
    }
    if (is_ident_text("yield") && !yield_is_name()) {
      ++pos_;
      expression();
      expect(";");
      return {};
    }
    if (is_ident() && is(":", 1)) {
      pos_ += 2;
      return statement();
    }
    if (is("class") || is("interface") || is("enum") || is("abstract") || is("static") ||
        (is_ident_text("record") && tok(1).kind == TokenKind::Identifier && is("(", 2))) {
      local_type();
      return {};
    }
    if (is("final") || is("@")) {
      std::size_t p = pos_;
      // Annotated or final local class.
      while (at(p).is("final") || at(p).is("abstract") || at(p).is("static")) ++p;
      if (at(p).is("class") || at(p).is("interface") || at(p).is("enum")) {
        local_type();
        return {};
      }
    }
    if (local_declaration_ahead()) {
      local_variable_declaration();
      expect(";");
      return {};
    }
    (void)t;
    expression();
    expect(";");
    return {};
  }

  bool yield_is_name() const {
    const auto& n = tok(1);
    return n.is("=") || n.is(".") || n.is("[") || n.is("(") || n.is("++") || n.is("--") || n.is("->") ||
           n.is(";") || n.is("+=") || n.is("-=") || n.is("*=") || n.is("/=") || n.is(":");
  }

  void local_type() {
    throw_sinks_.push_back({{}, true});
    const int saved = ctx_;
    modifiers();
    type_declaration();
    ctx_ = saved;
    throw_sinks_.pop_back();
  }

  void local_variable_declaration() {
    modifiers();
    const auto t = type();
    do {
      const auto name = ident();
      std::string vt = t;
      while (is("[") && is("]", 1)) {
        pos_ += 2;
        vt += "[]";
      }
      if (accept("=")) {
        const auto init = variable_initializer();
        if (vt == "var") vt = init;
      }
      declare(name, vt);
    } while (accept(","));
  }

  std::string variable_initializer() {
    if (is("{")) {
      array_initializer();
      return {};
    }
    return expression();
  }

  void array_initializer() {
    expect("{");
    while (!is("}")) {
      variable_initializer();
      if (!accept(",")) break;
    }
    expect("}");
  }

  std::vector<std::string> if_statement(std::vector<std::string>* cond_out) {
    const auto line = line_of(tok());
    expect("if");
    expect("(");
    id_sinks_.push_back({});
    expression();
    auto cond = pop_sink(id_sinks_);
    expect(")");

    const int saved = ctx_;
    const int then_guard = new_context(HandlingContext::Kind::Guard, line, {}, cond);
    ctx_ = then_guard;
    throw_sinks_.push_back({});
    statement();
    auto then_thrown = pop_sink(throw_sinks_);
    ctx_ = saved;

    std::vector<std::string> else_thrown;
    if (accept("else")) {
      ctx_ = new_context(HandlingContext::Kind::Guard, line, then_thrown, cond);
      throw_sinks_.push_back({});
      statement();
      else_thrown = pop_sink(throw_sinks_);
      ctx_ = saved;
      out_.contexts_[static_cast<std::size_t>(then_guard)].types = else_thrown;
    }
    auto all = then_thrown;
    for (auto& e : else_thrown) {
      if (std::find(all.begin(), all.end(), e) == all.end()) all.push_back(e);
    }
    if (cond_out) *cond_out = std::move(cond);
    return all;
  }

  void throw_statement() {
    if (is("new")) {
      const auto p = scan_type(pos_ + 1);
      if (p != kNpos) record(throw_sinks_, strip_type_args(text_of(pos_ + 1, p)));
      expression();
    } else {
      const auto type_name = expression();
      if (!type_name.empty()) record(throw_sinks_, strip_type_args(type_name));
    }
    expect(";");
  }

  void try_statement() {
    const auto line = line_of(tok());
    expect("try");
    const int saved = ctx_;
    const int t = new_context(HandlingContext::Kind::Try, line);
    ctx_ = t;
    push_scope();
    const bool with_resources = is("(");
    if (accept("(")) {
      while (!is(")")) {
        if (local_declaration_ahead()) {
          modifiers();
          const auto rt = type();
          const auto name = ident();
          expect("=");
          const auto init = expression();
          declare(name, rt == "var" ? init : rt);
        } else {
          expression();
        }
        if (!accept(";")) break;
      }
      expect(")");
    }
    block();
    pop_scope();
    ctx_ = saved;

    std::vector<std::string> caught;
    bool handled = false;
    while (is("catch")) {
      handled = true;
      ++pos_;
      expect("(");
      modifiers();
      std::vector<std::string> types{strip_type_args(type())};
      while (accept("|")) types.push_back(strip_type_args(type()));
      const auto name = ident();
      expect(")");
      for (const auto& ty : types) {
        if (std::find(caught.begin(), caught.end(), ty) == caught.end()) caught.push_back(ty);
      }
      push_scope();
      declare(name, types.size() == 1 ? types.front() : std::string());
      block();
      pop_scope();
    }
    out_.contexts_[static_cast<std::size_t>(t)].types = std::move(caught);
    if (accept("finally")) {
      handled = true;
      block();
    }
    if (!handled && !with_resources) unexpected("'catch' or 'finally'");
  }

  void for_statement() {
    expect("for");
    expect("(");
    push_scope();
    if (enhanced_for_ahead()) {
      modifiers();
      const auto t = type();
      declare(ident(), t);
      expect(":");
      expression();
    } else {
      if (local_declaration_ahead()) {
        local_variable_declaration();
      } else if (!is(";")) {
        do {
          expression();
        } while (accept(","));
      }
      for_rest();
    }
    expect(")");
    statement();
    pop_scope();
  }

  bool enhanced_for_ahead() const {
    std::size_t p = pos_;
    while (at(p).is("final") || at(p).is("@")) {
      if (at(p).is("final")) {
        ++p;
        continue;
      }
      p += 2;
      while (at(p).is(".") && at(p + 1).kind == TokenKind::Identifier) p += 2;
    }
    const auto end = scan_type(p);
    return end != kNpos && at(end).kind == TokenKind::Identifier && at(end + 1).is(":");
  }

  void for_rest() {
    expect(";");
    if (!is(";")) expression();
    expect(";");
    if (!is(")")) {
      do {
        expression();
      } while (accept(","));
    }
  }

  // switch statement or expression
  void switch_construct() {
    expect("switch");
    expect("(");
    expression();
    expect(")");
    expect("{");
    push_scope();
    while (!is("}")) {
      if (tok().kind == TokenKind::End) unexpected("'}'");
      if (is("case") || is("default")) {
        switch_label();
        if (accept("->")) {
          if (is("{")) {
            block();
          } else if (accept("throw")) {
            throw_statement();
          } else {
            expression();
            expect(";");
          }
        } else {
          expect(":");
        }
        continue;
      }
      block_statement();
    }
    pop_scope();
    expect("}");
  }

  void switch_label() {
    if (accept("default")) return;
    expect("case");
    const bool saved = no_lambda_;
    no_lambda_ = true;
    do {
      if (accept("default")) continue;
      if (accept("null")) continue;
      // Type pattern `case Foo f` (optionally with a `when` guard).
      const auto end = scan_type(pos_);
      if (end != kNpos && at(end).kind == TokenKind::Identifier && !at(end).is("when")) {
        const auto t = type();
        declare(ident(), t);
        if (is_ident_text("when")) {
          ++pos_;
          conditional();
        }
        continue;
      }
      conditional();
    } while (accept(","));
    no_lambda_ = saved;
  }

  // ---------------------------------------------------------------- expressions

  // Returns the static type of the expression when it is evident, else "".
  std::string expression() {
    DepthGuard guard(*this);
    auto lhs = conditional();
    if (assignment_op()) {
      expression();
      return lhs;
    }
    return lhs;
  }

  bool assignment_op() {
    static constexpr std::string_view ops[] = {"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<="};
    for (auto op : ops) {
      if (is(op)) {
        ++pos_;
        return true;
      }
    }
    // >>= and >>>=
    if (is(">") && is(">", 1) && adjacent(1)) {
      if (is("=", 2) && adjacent(2)) {
        pos_ += 3;
        return true;
      }
      if (is(">", 2) && adjacent(2) && is("=", 3) && adjacent(3)) {
        pos_ += 4;
        return true;
      }
    }
    return false;
  }

  std::string conditional() {
    auto t = binary(1);
    if (accept("?")) {
      const bool saved = no_lambda_;
      no_lambda_ = false;
      expression_or_lambda();
      expect(":");
      expression_or_lambda();
      no_lambda_ = saved;
      return {};
    }
    return t;
  }

  void expression_or_lambda() { conditional(); }

  // Binary operator at the current position: (precedence, token count), or {0,0}.
  std::pair<int, std::size_t> binary_op() const {
    const auto& t = tok();
    if (t.kind == TokenKind::Keyword && t.text == "instanceof") return {7, 1};
    if (t.kind != TokenKind::Punct) return {0, 0};
    if (t.text == ">") {
      if (is(">", 1) && adjacent(1)) {
        if (is(">", 2) && adjacent(2)) {
          if (is("=", 3) && adjacent(3)) return {0, 0};
          return {8, 3};
        }
        if (is("=", 2) && adjacent(2)) return {0, 0};
        return {8, 2};
      }
      if (is("=", 1) && adjacent(1)) return {7, 2};
      return {7, 1};
    }
    static const std::map<std::string_view, int> prec = {
        {"||", 1}, {"&&", 2}, {"|", 3},  {"^", 4},  {"&", 5},  {"==", 6}, {"!=", 6},
        {"<", 7},  {"<=", 7}, {"<<", 8}, {"+", 9},  {"-", 9},  {"*", 10}, {"/", 10}, {"%", 10}};
    if (auto it = prec.find(t.text); it != prec.end()) return {it->second, 1};
    return {0, 0};
  }

  std::string binary(int min_prec) {
    auto lhs = unary();
    while (true) {
      const auto [p, n] = binary_op();
      if (p == 0 || p < min_prec) break;
      if (is("instanceof")) {
        ++pos_;
        accept("final");
        const auto t = type();
        if (is_ident()) declare(ident(), t);
        lhs.clear();
        continue;
      }
      pos_ += n;
      binary(p + 1);
      lhs.clear();
    }
    return lhs;
  }

  bool operand_start(const Token& t) const {
    return t.kind == TokenKind::Identifier || t.kind == TokenKind::Literal || t.is("(") || t.is("!") ||
           t.is("~") || t.is("this") || t.is("super") || t.is("new") || t.is("switch") || is_primitive(t);
  }

  std::string unary() {
    DepthGuard guard(*this);
    if (is("++") || is("--") || is("+") || is("-") || is("!") || is("~")) {
      ++pos_;
      unary();
      return {};
    }
    if (is("(")) {
      if (!no_lambda_ && lambda_ahead()) {
        lambda();
        return {};
      }
      // Cast: (Type) operand, or (Type & Bound) operand.
      auto end = scan_type(pos_ + 1);
      while (end != kNpos && at(end).is("&")) end = scan_type(end + 1);
      if (end != kNpos && at(end).is(")")) {
        const bool prim = is_primitive(tok(1)) && end == pos_ + 2;
        const auto& next = at(end + 1);
        if (operand_start(next) || (prim && (next.is("+") || next.is("-") || next.is("++") || next.is("--")))) {
          const auto cast = text_of(pos_ + 1, end);
          pos_ = end + 1;
          if (!no_lambda_ && lambda_ahead()) {
            lambda();
          } else {
            unary();
          }
          return cast;
        }
      }
    }
    return postfix();
  }

  bool lambda_ahead() const {
    if (tok().kind == TokenKind::Identifier) return is("->", 1);
    if (!is("(")) return false;
    std::size_t p = pos_;
    int depth = 0;
    do {
      if (at(p).kind == TokenKind::End) return false;
      if (at(p).is("(")) ++depth;
      else if (at(p).is(")")) --depth;
      ++p;
    } while (depth > 0);
    return at(p).is("->");
  }

  void lambda() {
    push_scope();
    if (is_ident()) {
      declare(ident(), "");
    } else {
      expect("(");
      if (!is(")")) {
        do {
          modifiers();
          if (is_ident() && (is(",", 1) || is(")", 1))) {
            declare(ident(), "");
          } else {
            auto t = type();
            if (accept("...")) t += "[]";
            declare(ident(), t == "var" ? std::string() : t);
          }
        } while (accept(","));
      }
      expect(")");
    }
    expect("->");
    throw_sinks_.push_back({{}, true});
    const bool saved = no_lambda_;
    no_lambda_ = false;
    if (is("{")) {
      block();
    } else {
      expression();
    }
    no_lambda_ = saved;
    throw_sinks_.pop_back();
    pop_scope();
  }

  // Parses `( args )`; returns the argument count. Identifiers used in the
  // arguments are collected into `ids` when given.
  std::size_t arguments(std::vector<std::string>* ids) {
    expect("(");
    id_sinks_.push_back({});
    const bool saved = no_lambda_;
    no_lambda_ = false;
    std::size_t n = 0;
    if (!is(")")) {
      do {
        expression();
        ++n;
      } while (accept(","));
    }
    no_lambda_ = saved;
    auto collected = pop_sink(id_sinks_);
    for (const auto& id : collected) record(id_sinks_, id);
    if (ids) *ids = std::move(collected);
    expect(")");
    return n;
  }

  void add_invocation(const Token& name_tok, std::size_t begin, std::string hint,
                      std::optional<Pending> pending) {
    Invocation inv;
    inv.name = std::string(name_tok.text);
    inv.name_offset = name_tok.offset;
    inv.position = out_.position_of(name_tok.offset);
    inv.receiver_hint = std::move(hint);
    inv.context = ctx_;
    // Reserve the slot before parsing arguments so nested calls keep their own.
    const auto index = out_.invocations_.size();
    out_.invocations_.push_back(inv);
    std::vector<std::string> ids;
    const auto arity = arguments(&ids);
    auto& slot = out_.invocations_[index];
    slot.arity = arity;
    slot.argument_identifiers = std::move(ids);
    slot.span = Span{begin, at(pos_ - 1).end()};
    if (pending) {
      pending->invocation = index;
      pending_.push_back(std::move(*pending));
    }
  }

  // Receiver hint for a call whose receiver is the name chain `c`.
  std::pair<std::string, std::optional<Pending>> chain_hint(const Chain& c) const {
    if (c.names.empty()) return {{}, std::nullopt};
    if (c.this_prefixed) {
      if (c.names.size() == 1) return {{}, Pending{0, c.names.front(), true}};
      return {{}, std::nullopt};
    }
    if (c.names.size() == 1) {
      if (auto t = lookup(c.names.front())) return {*t, std::nullopt};
      return {{}, Pending{0, c.names.front(), false}};
    }
    if (lookup(c.names.front())) return {{}, std::nullopt};
    if (starts_upper(c.names.back())) {
      std::string joined;
      for (const auto& n : c.names) {
        if (!joined.empty()) joined += ".";
        joined += n;
      }
      return {joined, std::nullopt};
    }
    return {{}, std::nullopt};
  }

  std::string postfix() {
    const auto begin = tok().offset;
    Chain chain;
    std::string type = primary(chain, begin);
    while (true) {
      if (is(".")) {
        ++pos_;
        if (is("<")) skip_balanced("<", ">");
        if (is_ident() && is("(", 1)) {
          const auto& name_tok = tok();
          ++pos_;
          std::string hint = type;
          std::optional<Pending> pending;
          if (chain.active) std::tie(hint, pending) = chain_hint(chain);
          add_invocation(name_tok, begin, std::move(hint), std::move(pending));
          chain = {};
          type.clear();
          continue;
        }
        if (is_ident()) {
          const auto name = ident();
          if (chain.active) chain.names.push_back(name);
          type.clear();
          continue;
        }
        if (accept("class")) {
          chain = {};
          type = "Class";
          continue;
        }
        if (accept("this")) {
          chain = {};
          type.clear();
          continue;
        }
        if (is("new")) {
          chain = {};
          type = creator();
          continue;
        }
        if (accept("super")) {
          chain = {};
          type.clear();
          continue;
        }
        unexpected("member name");
      }
      if (is("[")) {
        ++pos_;
        expression();
        expect("]");
        chain = {};
        type.clear();
        continue;
      }
      if (is("::")) {
        ++pos_;
        if (!accept("new")) ident();
        chain = {};
        type.clear();
        continue;
      }
      if (is("++") || is("--")) {
        ++pos_;
        chain = {};
        type.clear();
        continue;
      }
      break;
    }
    return type;
  }

  std::string primary(Chain& chain, std::size_t begin) {
    const auto& t = tok();
    if (t.kind == TokenKind::Literal) {
      ++pos_;
      if (t.text.front() == '"') return "String";
      return {};
    }
    if (is("(")) {
      ++pos_;
      const bool saved = no_lambda_;
      no_lambda_ = false;
      auto inner = expression();
      no_lambda_ = saved;
      expect(")");
      return inner;
    }
    if (is("this")) {
      ++pos_;
      if (is("(")) {
        arguments(nullptr);  // explicit constructor invocation
        return {};
      }
      if (is(".") && tok(1).kind == TokenKind::Identifier) {
        chain.active = true;
        chain.this_prefixed = true;
      }
      return {};
    }
    if (is("super")) {
      ++pos_;
      if (is("(")) {
        arguments(nullptr);
        return {};
      }
      return {};
    }
    if (is("new")) return creator();
    if (is("switch")) {
      switch_construct();
      return {};
    }
    if (is_primitive(t) || is("void")) {
      // int.class, int[].class, int[]::new
      ++pos_;
      while (is("[") && is("]", 1)) pos_ += 2;
      if (!is(".") && !is("::")) unexpected("'.class' or '::'");
      return {};
    }
    if (t.kind == TokenKind::Identifier) {
      if (!no_lambda_ && is("->", 1)) {
        lambda();
        return {};
      }
      if (is("(", 1)) {
        ++pos_;
        add_invocation(t, begin, {}, std::nullopt);
        return {};
      }
      // Generic type method reference `Foo<Bar>::m` or array type `Foo[]::new`.
      if (is("<", 1) || (is("[", 1) && is("]", 2))) {
        const auto end = scan_type(pos_);
        if (end != kNpos && at(end).is("::")) {
          pos_ = end;
          return {};
        }
      }
      const auto name = ident();
      record(id_sinks_, name);
      chain.active = true;
      chain.names.push_back(name);
      if (auto v = lookup(name)) return *v;
      return {};
    }
    if (is("@")) {
      skip_annotation();
      return primary(chain, begin);
    }
    unexpected("expression");
  }

  // `new` creator. Constructor calls are not recorded as invocations.
  std::string creator() {
    expect("new");
    if (is("<")) skip_balanced("<", ">");
    while (is("@")) skip_annotation();
    const auto start = pos_;
    if (is_primitive(tok())) {
      ++pos_;
    } else {
      ident();
      if (is("<")) skip_balanced("<", ">");
      while (is(".") && tok(1).kind == TokenKind::Identifier) {
        pos_ += 2;
        if (is("<")) skip_balanced("<", ">");
      }
    }
    auto created = text_of(start, pos_);
    if (is("[")) {
      while (accept("[")) {
        if (!is("]")) expression();
        expect("]");
        created += "[]";
      }
      if (is("{")) array_initializer();
      return created;
    }
    arguments(nullptr);
    if (is("{")) anonymous_body();
    return created;
  }

  // ---------------------------------------------------------------- post-pass

  void resolve_pending() {
    for (const auto& p : pending_) {
      auto& inv = out_.invocations_[p.invocation];
      if (auto f = fields_.find(p.name); f != fields_.end()) {
        inv.receiver_hint = f->second;
      } else if (!p.fields_only && starts_upper(p.name)) {
        inv.receiver_hint = p.name;
      }
    }
  }

  JavaSource& out_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int ctx_ = -1;
  int depth_ = 0;
  bool no_lambda_ = false;
  bool in_record_ = false;
  std::vector<std::map<std::string, std::string>> scopes_;
  std::map<std::string, std::string> fields_;
  std::vector<Sink> throw_sinks_;
  std::vector<Sink> id_sinks_;
  std::vector<Pending> pending_;
};

JavaSource JavaSource::parse(std::string text) {
  JavaSource src;
  src.text_ = std::move(text);
  JavaParser parser(src);
  parser.run();
  return src;
}

bool JavaSource::declares_method(std::string_view name, std::size_t arity) const {
  return declared_methods_.count({std::string(name), arity}) > 0;
}

const Invocation* JavaSource::invocation_at(Span span) const {
  for (const auto& inv : invocations_) {
    if (inv.span == span) return &inv;
  }
  return nullptr;
}

SourcePosition JavaSource::position_of(std::size_t offset) const {
  const auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
  const auto line = static_cast<std::size_t>(it - line_starts_.begin());
  return {line, offset - line_starts_[line - 1] + 1};
}

}  // namespace exguard
