#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rgl/amr_graph.hpp"

namespace rgl {

enum class Order { L2R, R2L, Reversed };

std::string order_name(Order o);
Order order_from_name(const std::string& name);

struct Token {
  enum class Kind { Open, Close, Pointer, Concept, Role, Constant };
  Kind kind;
  int pointer = -1;  // Pointer only
  std::string text;  // Concept/Role/Constant payload (role without ':')

  bool operator==(const Token&) const = default;

  static Token open() { return {Kind::Open, -1, "("}; }
  static Token close() { return {Kind::Close, -1, ")"}; }
  static Token ptr(int k) { return {Kind::Pointer, k, ""}; }
  static Token concept_tok(std::string s) { return {Kind::Concept, -1, std::move(s)}; }
  static Token role(std::string s) { return {Kind::Role, -1, std::move(s)}; }
  static Token constant(std::string s) { return {Kind::Constant, -1, std::move(s)}; }
};

struct TokenSeq {
  std::vector<Token> tokens;
  Order order = Order::L2R;

  std::size_t size() const { return tokens.size(); }
};

// "( <R0> come-01 :purpose ... )" — space separated, constants quoted when
// they contain delimiters.
std::string render_tokens(const TokenSeq& t);
std::string render_token(const Token& t);

// Inverse of render for a space-separated line. Bare words lex as Concept;
// delinearize reinterprets them from context.
TokenSeq lex_tokens(const std::string& line, Order order);

struct DelinearizeError : std::runtime_error {
  explicit DelinearizeError(const std::string& msg) : std::runtime_error(msg) {}
};

// DFS linearization. L2R follows annotation child order, R2L reverses the
// child order at every node. Pointer indices are assigned densely in
// visitation order; every node introduction carries its pointer token.
TokenSeq linearize(const AmrGraph& g, Order order);

// Restores a graph from a possibly noisy token sequence. Well-formed input
// round-trips exactly; noise goes through the repair rules (drop targetless
// roles, close unbalanced opens, drop trailing orphans, bind unseen pointers
// to fresh "amr-unknown" nodes, then drop duplicate and cycle-closing
// edges). Throws DelinearizeError when nothing parseable remains.
AmrGraph delinearize(const TokenSeq& t);

// Whole-sequence reversal (the naive baseline); order tag becomes Reversed.
TokenSeq reverse_tokens(const TokenSeq& t);

// Linearization plus token positions of the structures: where each node's
// Concept token sits and where each edge's Role token sits (edge order
// matches g.edges). Positions feed the structure-loss curves.
struct Linearized {
  TokenSeq seq;
  std::vector<std::pair<std::string, int>> concept_pos;  // var -> token index
  std::vector<int> edge_role_pos;                        // per g.edges index
};

Linearized linearize_with_positions(const AmrGraph& g, Order order);

}  // namespace rgl
