#include "exguard/javadoc.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <regex>

#include "exguard/errors.hpp"
#include "text_util.hpp"

namespace exguard {

using detail::trim;

namespace {

bool is_type_token(std::string_view token) {
  if (token.empty()) return false;
  const char first = token.front();
  if (!(std::isalpha(static_cast<unsigned char>(first)) || first == '_' || first == '$')) return false;
  return std::all_of(token.begin(), token.end(), [](char c) { return detail::is_ident_char(c) || c == '.'; });
}

/// Index of a " - " style separator: a hyphen with whitespace (or end) on both sides.
std::optional<std::size_t> dash_separator(std::string_view s) {
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] == '-' && detail::is_space(s[i - 1]) && (i + 1 == s.size() || detail::is_space(s[i + 1]))) {
      return i;
    }
  }
  return std::nullopt;
}

}  // namespace

ExceptionSpec parse_throws_clause(std::string_view text) {
  auto t = trim(text);
  constexpr std::string_view kPrefix = "throws:";
  if (!detail::iequals_prefix(t, kPrefix)) {
    throw MalformedClause("not a Throws clause: '" + std::string(t.substr(0, 40)) + "'");
  }
  const auto rest = trim(t.substr(kPrefix.size()));

  std::string_view token = rest;
  std::string_view condition;
  if (const auto sep = dash_separator(rest)) {
    token = trim(rest.substr(0, *sep));
    condition = trim(rest.substr(*sep + 1));
  }
  if (!is_type_token(token)) {
    throw MalformedClause("Throws clause lacks an exception type: '" + std::string(t) + "'");
  }

  ExceptionSpec spec;
  spec.exception = std::string(token);
  if (!condition.empty() && condition.back() == '.') condition.remove_suffix(1);
  spec.condition = std::string(trim(condition));
  spec.guardable = spec.condition.size() >= 2 && spec.condition.compare(0, 2, "if") == 0 &&
                   (spec.condition.size() == 2 || !detail::is_ident_char(spec.condition[2]));
  return spec;
}

// ---- HTML rendering ----

bool looks_like_html(std::string_view page) {
  const auto head = page.substr(0, std::min<std::size_t>(page.size(), 4096));
  static const std::regex tag(R"(<\s*(html|body|div|dl|dt|dd|pre|h[1-6]|section|p|table)\b)",
                              std::regex::icase);
  return std::regex_search(head.begin(), head.end(), tag);
}

namespace {

constexpr std::array kBlockTags = {
    "address", "article", "blockquote", "body", "br",    "caption", "dd",     "div",   "dl",
    "dt",      "footer",  "h1",         "h2",   "h3",    "h4",      "h5",     "h6",    "header",
    "hr",      "html",    "li",         "main", "nav",   "ol",      "p",      "pre",   "section",
    "table",   "tbody",   "td",         "th",   "thead", "tr",      "ul",
};

bool is_block_tag(std::string_view name) {
  return std::find(kBlockTags.begin(), kBlockTags.end(), name) != kBlockTags.end();
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

/// Decodes the entity starting at html[i] == '&'; returns chars consumed (0 if not an entity).
std::size_t decode_entity(std::string_view html, std::size_t i, std::string& out) {
  const auto semi = html.find(';', i);
  if (semi == std::string_view::npos || semi - i > 10) return 0;
  const auto name = html.substr(i + 1, semi - i - 1);
  if (name.empty()) return 0;
  if (name[0] == '#') {
    unsigned long cp = 0;
    try {
      cp = (name.size() > 1 && (name[1] == 'x' || name[1] == 'X'))
               ? std::stoul(std::string(name.substr(2)), nullptr, 16)
               : std::stoul(std::string(name.substr(1)), nullptr, 10);
    } catch (const std::exception&) {
      return 0;
    }
    // Javadoc 11 puts a zero-width space between a method name and its '('.
    if (cp == 0x200B || cp == 0x200C || cp == 0xFEFF) return semi - i + 1;
    append_utf8(out, cp == 0xA0 ? ' ' : cp);
    return semi - i + 1;
  }
  static const std::array<std::pair<std::string_view, std::string_view>, 10> kNamed = {{
      {"lt", "<"}, {"gt", ">"}, {"amp", "&"}, {"quot", "\""}, {"apos", "'"},
      {"nbsp", " "}, {"ndash", "\u2013"}, {"mdash", "\u2014"}, {"hellip", "\u2026"}, {"zwnj", ""},
  }};
  for (const auto& [n, v] : kNamed) {
    if (name == n) {
      out.append(v);
      return semi - i + 1;
    }
  }
  return 0;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string html_to_text(std::string_view html) {
  std::string out;
  out.reserve(html.size() / 2);
  bool in_pre = false;
  bool pending_space = false;

  const auto newline = [&] {
    pending_space = false;
    if (!out.empty() && out.back() != '\n') out.push_back('\n');
  };
  const auto skip_past = [&](std::size_t from, std::string_view closing) {
    // Case-insensitive search for a closing tag.
    const auto hay = lower(html.substr(from));
    const auto pos = hay.find(closing);
    return pos == std::string::npos ? html.size() : from + pos + closing.size();
  };

  std::size_t i = 0;
  while (i < html.size()) {
    const char c = html[i];
    if (c == '<') {
      if (html.compare(i, 4, "<!--") == 0) {
        const auto end = html.find("-->", i + 4);
        i = end == std::string_view::npos ? html.size() : end + 3;
        continue;
      }
      const auto close = html.find('>', i);
      if (close == std::string_view::npos) break;
      auto tag = html.substr(i + 1, close - i - 1);
      const bool closing = !tag.empty() && tag.front() == '/';
      if (closing) tag.remove_prefix(1);
      std::size_t n = 0;
      while (n < tag.size() && (std::isalnum(static_cast<unsigned char>(tag[n])) || tag[n] == '-')) ++n;
      const auto name = lower(tag.substr(0, n));
      i = close + 1;
      if (!closing && (name == "script" || name == "style" || name == "head")) {
        i = skip_past(i, "</" + name);
        const auto gt = html.find('>', i);
        i = gt == std::string_view::npos ? html.size() : gt + 1;
        continue;
      }
      if (name == "pre") in_pre = !closing;
      if (is_block_tag(name)) newline();
      continue;
    }
    if (c == '&') {
      std::string decoded;
      if (const auto used = decode_entity(html, i, decoded); used > 0) {
        i += used;
        if (decoded == " ") {
          pending_space = true;
          continue;
        }
        if (pending_space && !out.empty() && out.back() != '\n') out.push_back(' ');
        pending_space = false;
        out += decoded;
        continue;
      }
    }
    if (in_pre && c == '\n') {
      newline();
      ++i;
      continue;
    }
    if (detail::is_space(c)) {
      pending_space = true;
      ++i;
      continue;
    }
    if (pending_space && !out.empty() && out.back() != '\n') out.push_back(' ');
    pending_space = false;
    out.push_back(c);
    ++i;
  }
  return out;
}

// ---- page parsing ----

namespace {

struct Declaration {
  std::size_t begin_line;  // first line of the member block (heading or signature)
  std::size_t end_line;    // one past the signature
  std::string name;
  std::string params;  // normalized "T a, U b"
  bool constructor = false;
};

const std::regex& label_re() {
  static const std::regex re(R"(^[A-Z][A-Za-z ]{1,40}:$)");
  return re;
}

const std::regex& item_start_re() {
  // "Type - condition" or a lone "Type"; the last dotted segment starts upper-case.
  static const std::regex re(R"(^(?:[A-Za-z_$][\w$]*\.)*[A-Z_$][\w$]*(?:\s+-(?:\s.*)?)?$)");
  return re;
}

bool is_lone_identifier(std::string_view line) {
  return !line.empty() && std::all_of(line.begin(), line.end(), detail::is_ident_char) &&
         !std::isdigit(static_cast<unsigned char>(line.front()));
}

constexpr std::array<std::string_view, 10> kModifiers = {
    "public", "protected", "private", "static", "abstract", "final", "synchronized", "native",
    "default", "strictfp"};

bool starts_with_modifier(std::string_view line) {
  for (auto m : kModifiers) {
    if (line.size() > m.size() && line.substr(0, m.size()) == m && detail::is_space(line[m.size()])) {
      return true;
    }
  }
  return false;
}

/// Removes "@Name" and "@Name(...)" annotations.
std::string strip_annotations(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '@' && i + 1 < s.size() && detail::is_ident_char(s[i + 1])) {
      ++i;
      while (i < s.size() && (detail::is_ident_char(s[i]) || s[i] == '.')) ++i;
      if (i < s.size() && s[i] == '(') {
        int depth = 0;
        for (; i < s.size(); ++i) {
          if (s[i] == '(') ++depth;
          else if (s[i] == ')' && --depth == 0) {
            ++i;
            break;
          }
        }
      }
      continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

/// Parses a rendered member signature. Returns nullopt when the text is not one.
std::optional<Declaration> parse_signature(std::string_view raw, std::string_view type_simple_name) {
  const auto text = detail::collapse_whitespace(strip_annotations(raw));
  const auto open = text.find('(');
  if (open == std::string::npos || open == 0) return std::nullopt;
  int depth = 0;
  std::size_t close = std::string::npos;
  for (std::size_t i = open; i < text.size(); ++i) {
    if (text[i] == '(') ++depth;
    else if (text[i] == ')' && --depth == 0) {
      close = i;
      break;
    }
  }
  if (close == std::string::npos) return std::nullopt;

  auto tail = trim(std::string_view(text).substr(close + 1));
  if (!tail.empty() && (tail.back() == ';' || tail.back() == '{')) tail = trim(tail.substr(0, tail.size() - 1));
  if (!tail.empty() && tail.substr(0, 7) != "throws ") return std::nullopt;

  const auto head = trim(std::string_view(text).substr(0, open));
  auto name_begin = head.size();
  while (name_begin > 0 && detail::is_ident_char(head[name_begin - 1])) --name_begin;
  if (name_begin == head.size()) return std::nullopt;

  Declaration decl;
  decl.name = std::string(head.substr(name_begin));
  if (std::isdigit(static_cast<unsigned char>(decl.name.front()))) return std::nullopt;

  // Everything before the name must be modifiers / type parameters / a return type.
  const auto prefix = trim(head.substr(0, name_begin));
  bool has_return_type = false;
  for (const auto& word : detail::split_top_level(prefix, ' ')) {
    if (word.empty()) continue;
    const bool modifier = std::find(kModifiers.begin(), kModifiers.end(), word) != kModifiers.end();
    if (!modifier && word.front() != '<') has_return_type = true;
  }
  decl.constructor = !has_return_type && decl.name == type_simple_name;
  if (!has_return_type && !decl.constructor) return std::nullopt;

  std::vector<std::string> params;
  for (const auto& p : detail::split_top_level(std::string_view(text).substr(open + 1, close - open - 1), ',')) {
    auto param = detail::collapse_whitespace(p);
    if (param.rfind("final ", 0) == 0) param.erase(0, 6);
    params.push_back(std::move(param));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) decl.params += ", ";
    decl.params += params[i];
  }
  return decl;
}

struct PageHeader {
  std::string package;
  std::string type;  // possibly nested, e.g. "Map.Entry"
};

PageHeader find_header(const std::vector<std::string_view>& lines) {
  static const std::regex package_re(R"(^(?:[Pp]ackage\s+)([a-z][\w]*(?:\.[a-z_][\w]*)*)\s*;?$)");
  static const std::regex bare_package_re(R"(^[a-z][a-z0-9_]*(?:\.[a-z_][a-z0-9_]*)+$)");
  static const std::regex title_re(
      R"(^(?:Class|Interface|Enum|Enum Class|Annotation Type|Annotation Interface|Record|Record Class)\s+([A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*)\s*(?:<.*>)?$)");
  PageHeader header;
  std::string bare_package;
  for (auto raw : lines) {
    const std::string line(trim(raw));
    std::smatch m;
    if (header.package.empty() && std::regex_match(line, m, package_re)) {
      header.package = m[1];
    } else if (header.type.empty() && bare_package.empty() && std::regex_match(line, bare_package_re)) {
      bare_package = line;
    } else if (header.type.empty() && std::regex_match(line, m, title_re)) {
      header.type = m[1];
      break;
    }
  }
  if (header.package.empty()) header.package = bare_package;
  return header;
}

std::vector<Declaration> find_declarations(const std::vector<std::string_view>& lines,
                                           std::string_view type_simple_name) {
  std::vector<Declaration> decls;
  std::string_view previous;  // previous non-empty line
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto stripped = trim(std::string_view(strip_annotations(line)));
    const bool after_heading =
        is_lone_identifier(previous) && line.find(std::string(previous) + "(") != std::string_view::npos;
    const bool candidate = line.find('(') != std::string_view::npos &&
                           (starts_with_modifier(stripped) || after_heading);
    if (candidate) {
      // Join continuation lines of a signature split across lines.
      std::string joined(line);
      std::size_t end = i + 1;
      auto balance = [](std::string_view s) {
        return std::count(s.begin(), s.end(), '(') - std::count(s.begin(), s.end(), ')');
      };
      while (balance(joined) > 0 && end < lines.size() && end < i + 12) {
        joined += ' ';
        joined += trim(lines[end++]);
      }
      if (auto decl = parse_signature(joined, type_simple_name)) {
        decl->begin_line = i;
        // The heading may be separated by blank lines; walk back to it.
        if (after_heading) {
          std::size_t h = i;
          while (h > 0 && trim(lines[h - 1]).empty()) --h;
          decl->begin_line = h - 1;
        }
        decl->end_line = end;
        decls.push_back(std::move(*decl));
        previous = {};
        i = end - 1;
        continue;
      }
    }
    previous = line;
  }
  return decls;
}

std::vector<ExceptionSpec> collect_throws(const std::vector<std::string_view>& lines, std::size_t begin,
                                          std::size_t end) {
  std::vector<std::string> items;
  bool in_throws = false;
  bool item_open = false;
  for (std::size_t i = begin; i < end; ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) {
      in_throws = item_open = false;
      continue;
    }
    if (detail::iequals_prefix(line, "throws:")) {
      in_throws = true;
      item_open = false;
      const auto inline_item = trim(line.substr(7));
      if (!inline_item.empty()) {
        items.emplace_back(inline_item);
        item_open = true;
      }
      continue;
    }
    if (!in_throws) continue;
    const std::string text(line);
    if (std::regex_match(text, label_re())) {
      in_throws = item_open = false;
      continue;
    }
    if (std::regex_match(text, item_start_re())) {
      items.push_back(text);
      item_open = true;
    } else if (item_open) {
      items.back() += ' ';
      items.back() += text;
    }
  }
  std::vector<ExceptionSpec> specs;
  specs.reserve(items.size());
  for (const auto& item : items) specs.push_back(parse_throws_clause("Throws: " + item));
  return specs;
}

}  // namespace

std::vector<ApiEntry> parse_api_page(std::string_view page) {
  const std::string text = looks_like_html(page) ? html_to_text(page) : std::string(page);
  const auto lines = detail::split_lines(text);

  const auto header = find_header(lines);
  const auto simple = std::string(simple_type_name(header.type));
  const auto decls = find_declarations(lines, simple);
  if (decls.empty()) throw PageStructureError("no method declaration found on page");
  if (header.type.empty()) throw PageStructureError("page declares methods but names no class or interface");

  const std::string qualified_type = header.package.empty() ? header.type : header.package + "." + header.type;
  std::vector<ApiEntry> entries;
  for (std::size_t d = 0; d < decls.size(); ++d) {
    const auto& decl = decls[d];
    const auto region_end = d + 1 < decls.size() ? decls[d + 1].begin_line : lines.size();
    auto specs = collect_throws(lines, decl.end_line, region_end);
    if (decl.constructor || specs.empty()) continue;
    entries.push_back(make_entry(qualified_type + "." + decl.name + "(" + decl.params + ")", std::move(specs)));
  }
  return entries;
}

}  // namespace exguard
