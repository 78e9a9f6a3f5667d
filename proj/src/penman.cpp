#include "rgl/penman.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace rgl {

namespace {

enum class TokKind { Open, Close, Slash, Role, Atom, Quoted };

struct Tok {
  TokKind kind;
  std::string text;  // role without ':', quoted without quotes
  std::size_t offset;
};

bool is_delim(char c) {
  return c == '(' || c == ')' || c == '/' || c == '"' ||
         std::isspace(static_cast<unsigned char>(c));
}

std::vector<Tok> lex(const std::string& s, std::size_t start) {
  std::vector<Tok> out;
  std::size_t i = start;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '(') {
      out.push_back({TokKind::Open, "(", i++});
    } else if (c == ')') {
      out.push_back({TokKind::Close, ")", i++});
    } else if (c == '/') {
      out.push_back({TokKind::Slash, "/", i++});
    } else if (c == '"') {
      std::size_t begin = i++;
      std::string val;
      while (i < s.size() && s[i] != '"') {
        if (s[i] == '\\' && i + 1 < s.size()) ++i;
        val += s[i++];
      }
      if (i >= s.size())
        throw PenmanError(PenmanErrorKind::BadSyntax, begin, "unterminated string");
      ++i;  // closing quote
      out.push_back({TokKind::Quoted, val, begin});
    } else if (c == ':') {
      std::size_t begin = i++;
      std::string role;
      while (i < s.size() && !is_delim(s[i]) && s[i] != ':') role += s[i++];
      if (role.empty())
        throw PenmanError(PenmanErrorKind::BadSyntax, begin, "empty role name");
      out.push_back({TokKind::Role, role, begin});
    } else {
      std::size_t begin = i;
      std::string atom;
      while (i < s.size() && !is_delim(s[i]) && s[i] != ':') atom += s[i++];
      out.push_back({TokKind::Atom, atom, begin});
    }
  }
  return out;
}

bool is_inverse_role(const std::string& role) {
  return role.size() > 3 && role.ends_with("-of");
}

struct Parser {
  explicit Parser(const std::vector<Tok>& tokens) : toks(tokens) {}

  const std::vector<Tok>& toks;
  std::size_t pos = 0;
  std::set<std::string> defined_vars;  // from the pre-scan
  AmrGraph g;
  int seq = 0;

  const Tok& peek() const {
    if (pos < toks.size()) return toks[pos];
    throw PenmanError(PenmanErrorKind::UnbalancedParens,
                      toks.empty() ? 0 : toks.back().offset + 1,
                      "unexpected end of input");
  }

  void add_edge(const std::string& src, const std::string& role,
                const std::string& dst) {
    Edge e;
    if (is_inverse_role(role)) {
      e = {dst, role.substr(0, role.size() - 3), src, seq++};
    } else {
      e = {src, role, dst, seq++};
    }
    for (const auto& prev : g.edges)  // identical triples merge silently
      if (prev.src == e.src && prev.role == e.role && prev.dst == e.dst) return;
    g.edges.push_back(e);
  }

  void add_attribute(const std::string& src, const std::string& role,
                     const std::string& value) {
    for (const auto& prev : g.attributes)
      if (prev.src == src && prev.role == role && prev.value == value) return;
    g.attributes.push_back({src, role, value, seq++});
  }

  std::string parse_node() {
    const Tok& open = peek();
    if (open.kind != TokKind::Open)
      throw PenmanError(PenmanErrorKind::BadSyntax, open.offset, "expected '('");
    ++pos;

    const Tok& var_tok = peek();
    if (var_tok.kind != TokKind::Atom)
      throw PenmanError(PenmanErrorKind::BadSyntax, var_tok.offset,
                        "expected variable after '('");
    std::string var = var_tok.text;
    ++pos;

    for (const auto& n : g.nodes)
      if (n.var == var)
        throw PenmanError(PenmanErrorKind::DuplicateVariableDefinition,
                          var_tok.offset, "variable defined twice: " + var);

    if (peek().kind != TokKind::Slash)
      throw PenmanError(PenmanErrorKind::BadSyntax, peek().offset,
                        "expected '/' after variable");
    ++pos;
    const Tok& concept_tok = peek();
    if (concept_tok.kind != TokKind::Atom && concept_tok.kind != TokKind::Quoted)
      throw PenmanError(PenmanErrorKind::BadSyntax, concept_tok.offset,
                        "expected concept after '/'");
    g.nodes.push_back({var, concept_tok.text});
    ++pos;

    while (true) {
      const Tok& t = peek();
      if (t.kind == TokKind::Close) {
        ++pos;
        return var;
      }
      if (t.kind != TokKind::Role)
        throw PenmanError(PenmanErrorKind::BadSyntax, t.offset,
                          "expected role or ')'");
      std::string role = t.text;
      std::size_t role_off = t.offset;
      ++pos;

      if (pos >= toks.size())
        throw PenmanError(PenmanErrorKind::DanglingRole, role_off,
                          "role without target: :" + role);
      const Tok& tgt = toks[pos];
      if (tgt.kind == TokKind::Open) {
        std::string child = parse_node();
        add_edge(var, role, child);
      } else if (tgt.kind == TokKind::Quoted) {
        add_attribute(var, role, tgt.text);
        ++pos;
      } else if (tgt.kind == TokKind::Atom) {
        if (defined_vars.count(tgt.text)) {
          add_edge(var, role, tgt.text);  // reentrant mention
        } else {
          add_attribute(var, role, tgt.text);
        }
        ++pos;
      } else {
        throw PenmanError(PenmanErrorKind::DanglingRole, role_off,
                          "role without target: :" + role);
      }
    }
  }
};

// collect "(var /" definitions so bare atoms can be classified var/constant
std::set<std::string> scan_definitions(const std::vector<Tok>& toks) {
  std::set<std::string> vars;
  for (std::size_t i = 0; i + 2 < toks.size(); ++i) {
    if (toks[i].kind == TokKind::Open && toks[i + 1].kind == TokKind::Atom &&
        toks[i + 2].kind == TokKind::Slash)
      vars.insert(toks[i + 1].text);
  }
  return vars;
}

// leading "# ..." lines; returns (metadata, offset of first non-comment byte)
std::pair<Metadata, std::size_t> strip_metadata(const std::string& text) {
  Metadata meta;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t line_start = i;
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '\n')
      ++i;
    if (i >= text.size() || text[i] != '#') {
      i = line_start;
      break;
    }
    std::size_t eol = text.find('\n', i);
    std::string line = text.substr(i, eol == std::string::npos ? std::string::npos
                                                               : eol - i);
    std::size_t tag = line.find("::");
    if (tag != std::string::npos) {
      std::size_t key_start = tag + 2;
      std::size_t key_end = key_start;
      while (key_end < line.size() &&
             !std::isspace(static_cast<unsigned char>(line[key_end])))
        ++key_end;
      std::string key = line.substr(key_start, key_end - key_start);
      std::size_t val_start = key_end;
      while (val_start < line.size() &&
             std::isspace(static_cast<unsigned char>(line[val_start])))
        ++val_start;
      meta.emplace_back(key, line.substr(val_start));
    }
    if (eol == std::string::npos) {
      i = text.size();
      break;
    }
    i = eol + 1;
  }
  return {meta, i};
}

void check_acyclic(const AmrGraph& g) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& e : g.edges) out[e.src].push_back(e.dst);
  std::map<std::string, int> color;
  for (const auto& n : g.nodes) {
    if (color[n.var] != 0) continue;
    std::vector<std::pair<std::string, std::size_t>> st{{n.var, 0}};
    color[n.var] = 1;
    while (!st.empty()) {
      auto& [v, idx] = st.back();
      auto& succ = out[v];
      if (idx < succ.size()) {
        const std::string& u = succ[idx++];
        if (color[u] == 1)
          throw PenmanError(PenmanErrorKind::CyclicGraph, 0,
                            "cycle in canonical edge direction through: " + u);
        if (color[u] == 0) {
          color[u] = 1;
          st.push_back({u, 0});
        }
      } else {
        color[v] = 2;
        st.pop_back();
      }
    }
  }
}

bool needs_quotes(const std::string& v) {
  if (v.empty()) return true;
  for (char c : v)
    if (is_delim(c) || c == ':' || c == '<') return true;
  return false;
}

std::string render_constant(const std::string& v) {
  if (!needs_quotes(v)) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

// One relation slot of a node, ordered by annotation seq.
struct ChildRef {
  int seq;
  bool is_attribute;
  std::size_t index;  // into edges or attributes
  bool inverted;      // edge traversed dst -> src
};

std::vector<ChildRef> children_of(const AmrGraph& g, const std::string& var) {
  std::vector<ChildRef> out;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    if (g.edges[i].src == var) out.push_back({g.edges[i].seq, false, i, false});
    if (g.edges[i].dst == var) out.push_back({g.edges[i].seq, false, i, true});
  }
  for (std::size_t i = 0; i < g.attributes.size(); ++i)
    if (g.attributes[i].src == var)
      out.push_back({g.attributes[i].seq, true, i, false});
  std::sort(out.begin(), out.end(),
            [](const ChildRef& a, const ChildRef& b) { return a.seq < b.seq; });
  return out;
}

}  // namespace

AmrGraph parse_penman(const std::string& text) {
  auto [meta, body_start] = strip_metadata(text);
  auto toks = lex(text, body_start);
  if (toks.empty())
    throw PenmanError(PenmanErrorKind::EmptyInput, body_start, "no penman block");

  Parser p(toks);
  p.defined_vars = scan_definitions(toks);
  std::string root = p.parse_node();
  if (p.pos != toks.size())
    throw PenmanError(PenmanErrorKind::TrailingContent, toks[p.pos].offset,
                      "content after closing ')'");
  p.g.root = root;
  p.g.metadata = std::move(meta);
  check_acyclic(p.g);
  try {
    p.g.validate();
  } catch (const GraphError& e) {
    throw PenmanError(PenmanErrorKind::BadSyntax, 0, e.what());
  }
  return std::move(p.g);
}

std::string serialize_penman(const AmrGraph& g) {
  std::set<std::string> visited;
  std::vector<bool> edge_done(g.edges.size(), false);
  std::ostringstream out;

  auto visit = [&](auto&& self, const std::string& var) -> void {
    visited.insert(var);
    out << "(" << var << " / " << g.find_node(var)->concept_name;
    for (const ChildRef& c : children_of(g, var)) {
      if (c.is_attribute) {
        const Attribute& a = g.attributes[c.index];
        out << " :" << a.role << " " << render_constant(a.value);
        continue;
      }
      if (edge_done[c.index]) continue;
      const Edge& e = g.edges[c.index];
      edge_done[c.index] = true;
      std::string role = c.inverted ? e.role + "-of" : e.role;
      std::string next = c.inverted ? e.src : e.dst;
      out << " :" << role << " ";
      if (visited.count(next)) {
        out << next;
      } else {
        self(self, next);
      }
    }
    out << ")";
  };
  visit(visit, g.root);
  return out.str();
}

std::vector<BlockResult> parse_penman_blocks(const std::string& text) {
  std::vector<std::string> blocks;
  std::string current;
  std::istringstream in(text);
  std::string line;
  auto flush = [&]() {
    bool only_ws = current.find_first_not_of(" \t\r\n") == std::string::npos;
    if (!only_ws) blocks.push_back(current);
    current.clear();
  };
  while (std::getline(in, line)) {
    bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
    if (blank) {
      flush();
    } else {
      current += line;
      current += '\n';
    }
  }
  flush();

  std::vector<BlockResult> out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    BlockResult r;
    r.block_index = i;
    try {
      r.graph = parse_penman(blocks[i]);
    } catch (const PenmanError& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string write_corpus_text(const std::vector<AmrGraph>& graphs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (i) out << "\n";
    for (const auto& [k, v] : graphs[i].metadata)
      out << "# ::" << k << " " << v << "\n";
    out << serialize_penman(graphs[i]) << "\n";
  }
  return out.str();
}

}  // namespace rgl
