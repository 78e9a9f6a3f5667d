#include "rgl/linearize.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace rgl {

std::string order_name(Order o) {
  switch (o) {
    case Order::L2R: return "L2R";
    case Order::R2L: return "R2L";
    case Order::Reversed: return "REVERSED";
  }
  return "?";
}

Order order_from_name(const std::string& name) {
  if (name == "L2R" || name == "l2r") return Order::L2R;
  if (name == "R2L" || name == "r2l") return Order::R2L;
  if (name == "REVERSED" || name == "reversed") return Order::Reversed;
  throw std::runtime_error("unknown order tag: " + name);
}

namespace {

bool token_needs_quotes(const std::string& v) {
  if (v.empty()) return true;
  for (char c : v)
    if (c == ' ' || c == '\t' || c == '(' || c == ')' || c == '"') return true;
  return false;
}

struct ChildRef {
  int seq;
  bool is_attribute;
  std::size_t index;
  bool inverted;
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

std::string render_token(const Token& t) {
  switch (t.kind) {
    case Token::Kind::Open: return "(";
    case Token::Kind::Close: return ")";
    case Token::Kind::Pointer: return "<R" + std::to_string(t.pointer) + ">";
    case Token::Kind::Role: return ":" + t.text;
    case Token::Kind::Concept: return t.text;
    case Token::Kind::Constant: {
      if (!token_needs_quotes(t.text)) return t.text;
      std::string out = "\"";
      for (char c : t.text) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      return out + "\"";
    }
  }
  return "";
}

std::string render_tokens(const TokenSeq& t) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    if (i) out << ' ';
    out << render_token(t.tokens[i]);
  }
  return out.str();
}

TokenSeq lex_tokens(const std::string& line, Order order) {
  TokenSeq seq;
  seq.order = order;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++i;
      continue;
    }
    if (c == '(') {
      seq.tokens.push_back(Token::open());
      ++i;
    } else if (c == ')') {
      seq.tokens.push_back(Token::close());
      ++i;
    } else if (c == '"') {
      ++i;
      std::string val;
      while (i < line.size() && line[i] != '"') {
        if (line[i] == '\\' && i + 1 < line.size()) ++i;
        val += line[i++];
      }
      if (i < line.size()) ++i;
      seq.tokens.push_back(Token::constant(std::move(val)));
    } else {
      std::size_t begin = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' &&
             line[i] != '(' && line[i] != ')')
        ++i;
      std::string word = line.substr(begin, i - begin);
      if (word.size() >= 4 && word.front() == '<' && word.back() == '>' &&
          word[1] == 'R') {
        bool digits = word.size() > 3;
        for (std::size_t k = 2; k + 1 < word.size(); ++k)
          if (!std::isdigit(static_cast<unsigned char>(word[k]))) digits = false;
        if (digits) {
          seq.tokens.push_back(Token::ptr(std::stoi(word.substr(2, word.size() - 3))));
          continue;
        }
      }
      if (word[0] == ':' && word.size() > 1) {
        seq.tokens.push_back(Token::role(word.substr(1)));
      } else {
        seq.tokens.push_back(Token::concept_tok(std::move(word)));
      }
    }
  }
  return seq;
}

Linearized linearize_with_positions(const AmrGraph& g, Order order) {
  Linearized out;
  out.seq.order = order;
  out.edge_role_pos.assign(g.edges.size(), -1);
  std::map<std::string, int> pointer_of;
  std::vector<bool> edge_done(g.edges.size(), false);
  int next_pointer = 0;
  auto& toks = out.seq.tokens;

  auto visit = [&](auto&& self, const std::string& var) -> void {
    pointer_of[var] = next_pointer++;
    toks.push_back(Token::open());
    toks.push_back(Token::ptr(pointer_of[var]));
    out.concept_pos.emplace_back(var, int(toks.size()));
    toks.push_back(Token::concept_tok(g.find_node(var)->concept_name));

    std::vector<ChildRef> kids = children_of(g, var);
    if (order == Order::R2L) std::reverse(kids.begin(), kids.end());
    for (const ChildRef& c : kids) {
      if (c.is_attribute) {
        const Attribute& a = g.attributes[c.index];
        toks.push_back(Token::role(a.role));
        toks.push_back(Token::constant(a.value));
        continue;
      }
      if (edge_done[c.index]) continue;
      const Edge& e = g.edges[c.index];
      edge_done[c.index] = true;
      out.edge_role_pos[c.index] = int(toks.size());
      toks.push_back(Token::role(c.inverted ? e.role + "-of" : e.role));
      const std::string& next = c.inverted ? e.src : e.dst;
      auto it = pointer_of.find(next);
      if (it != pointer_of.end()) {
        toks.push_back(Token::ptr(it->second));
      } else {
        self(self, next);
      }
    }
    toks.push_back(Token::close());
  };

  if (order == Order::Reversed)
    throw std::runtime_error("linearize: use reverse_tokens for REVERSED");
  visit(visit, g.root);
  return out;
}

TokenSeq linearize(const AmrGraph& g, Order order) {
  return linearize_with_positions(g, order).seq;
}

TokenSeq reverse_tokens(const TokenSeq& t) {
  TokenSeq out;
  out.order = Order::Reversed;
  out.tokens.assign(t.tokens.rbegin(), t.tokens.rend());
  return out;
}

namespace {

bool is_inverse_role(const std::string& role) {
  return role.size() > 3 && role.ends_with("-of");
}

// Tolerant parser state for delinearize. Fresh variables are z0, z1, ...
struct Restorer {
  const std::vector<Token>& toks;
  std::size_t pos = 0;
  AmrGraph g;
  std::map<int, std::string> var_of_pointer;
  int next_var = 0;
  int seq = 0;

  std::string fresh_var() { return "z" + std::to_string(next_var++); }

  const Token* peek() const { return pos < toks.size() ? &toks[pos] : nullptr; }

  void add_edge(const std::string& src, const std::string& role,
                const std::string& dst) {
    Edge e;
    if (is_inverse_role(role)) {
      e = {dst, role.substr(0, role.size() - 3), src, seq++};
    } else {
      e = {src, role, dst, seq++};
    }
    g.edges.push_back(e);
  }

  std::string node_for_pointer(int k) {
    auto it = var_of_pointer.find(k);
    if (it != var_of_pointer.end()) return it->second;
    // unseen pointer reference: fresh placeholder node (repair rule)
    std::string v = fresh_var();
    g.nodes.push_back({v, "amr-unknown"});
    var_of_pointer[k] = v;
    return v;
  }

  // Parses one node; `pos` sits just past the Open token.
  std::string parse_node_body() {
    std::string var = fresh_var();
    bool have_concept = false;
    std::string concept_name = "amr-unknown";

    if (const Token* t = peek(); t && t->kind == Token::Kind::Pointer) {
      if (!var_of_pointer.count(t->pointer)) var_of_pointer[t->pointer] = var;
      ++pos;
    }
    if (const Token* t = peek();
        t && (t->kind == Token::Kind::Concept || t->kind == Token::Kind::Constant)) {
      concept_name = t->text;
      have_concept = true;
      ++pos;
    }
    (void)have_concept;
    g.nodes.push_back({var, concept_name});

    while (const Token* t = peek()) {
      if (t->kind == Token::Kind::Close) {
        ++pos;
        return var;
      }
      if (t->kind == Token::Kind::Role) {
        std::string role = t->text;
        ++pos;
        const Token* tgt = peek();
        if (!tgt || tgt->kind == Token::Kind::Close ||
            tgt->kind == Token::Kind::Role) {
          continue;  // drop role with no following target
        }
        if (tgt->kind == Token::Kind::Open) {
          ++pos;
          std::string child = parse_node_body();
          add_edge(var, role, child);
        } else if (tgt->kind == Token::Kind::Pointer) {
          add_edge(var, role, node_for_pointer(tgt->pointer));
          ++pos;
        } else {  // Concept or Constant after a role reads as attribute value
          g.attributes.push_back({var, role, tgt->text, seq++});
          ++pos;
        }
        continue;
      }
      // stray token inside a node (unexpected pointer/concept/open): an Open
      // starts an orphan child we still attach via a generic role; the rest
      // is dropped
      if (t->kind == Token::Kind::Open) {
        ++pos;
        std::string child = parse_node_body();
        add_edge(var, "mod", child);
      } else {
        ++pos;
      }
    }
    return var;  // ran out of tokens: unbalanced opens closed implicitly
  }
};

}  // namespace

AmrGraph delinearize(const TokenSeq& t) {
  Restorer r(t.tokens);

  // skip leading orphans until the first Open
  while (const Token* tok = r.peek()) {
    if (tok->kind == Token::Kind::Open) break;
    ++r.pos;
  }
  if (!r.peek()) {
    // no structure at all: a single bare concept still counts as a graph
    for (const auto& tok : t.tokens) {
      if (tok.kind == Token::Kind::Concept || tok.kind == Token::Kind::Constant) {
        AmrGraph g;
        g.nodes.push_back({"z0", tok.text});
        g.root = "z0";
        return g;
      }
    }
    throw DelinearizeError("empty after repair");
  }
  ++r.pos;
  std::string root = r.parse_node_body();
  // tokens after the root's close are trailing orphans: dropped
  r.g.root = root;

  AmrGraph g = std::move(r.g);

  // repair pass: drop duplicate edges/attributes, then edges closing a
  // canonical cycle
  {
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    std::vector<Edge> kept;
    for (const auto& e : g.edges)
      if (seen.insert({e.src, e.role, e.dst}).second) kept.push_back(e);
    g.edges = std::move(kept);
    std::set<std::tuple<std::string, std::string, std::string>> seen_attr;
    std::vector<Attribute> kept_attr;
    for (const auto& a : g.attributes)
      if (seen_attr.insert({a.src, a.role, a.value}).second)
        kept_attr.push_back(a);
    g.attributes = std::move(kept_attr);
  }
  {
    std::vector<Edge> kept;
    std::map<std::string, std::set<std::string>> reach;  // var -> descendants
    auto reaches = [&](const std::string& from, const std::string& to) {
      std::set<std::string> vis;
      std::vector<std::string> stack{from};
      while (!stack.empty()) {
        std::string v = stack.back();
        stack.pop_back();
        if (v == to) return true;
        if (!vis.insert(v).second) continue;
        for (const auto& e : kept)
          if (e.src == v) stack.push_back(e.dst);
      }
      return false;
    };
    for (const auto& e : g.edges) {
      if (e.src == e.dst || reaches(e.dst, e.src)) continue;  // would cycle
      kept.push_back(e);
    }
    g.edges = std::move(kept);
  }

  // drop nodes disconnected from the root (possible after edge drops)
  {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& e : g.edges) {
      adj[e.src].push_back(e.dst);
      adj[e.dst].push_back(e.src);
    }
    std::set<std::string> reached;
    std::vector<std::string> stack{g.root};
    while (!stack.empty()) {
      std::string v = stack.back();
      stack.pop_back();
      if (!reached.insert(v).second) continue;
      for (const auto& u : adj[v]) stack.push_back(u);
    }
    std::vector<Node> nodes;
    for (const auto& n : g.nodes)
      if (reached.count(n.var)) nodes.push_back(n);
    g.nodes = std::move(nodes);
    std::vector<Attribute> attrs;
    for (const auto& a : g.attributes)
      if (reached.count(a.src)) attrs.push_back(a);
    g.attributes = std::move(attrs);
  }

  if (g.nodes.empty()) throw DelinearizeError("empty after repair");
  g.validate();
  return g;
}

}  // namespace rgl
