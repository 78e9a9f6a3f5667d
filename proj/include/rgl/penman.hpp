#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgl/amr_graph.hpp"

namespace rgl {

enum class PenmanErrorKind {
  EmptyInput,
  UnbalancedParens,
  DanglingRole,
  DuplicateVariableDefinition,
  TrailingContent,
  CyclicGraph,
  BadSyntax,
};

struct PenmanError : std::runtime_error {
  PenmanError(PenmanErrorKind k, std::size_t byte_offset, const std::string& msg)
      : std::runtime_error(msg + " (byte " + std::to_string(byte_offset) + ")"),
        kind(k),
        offset(byte_offset) {}
  PenmanErrorKind kind;
  std::size_t offset;
};

// Parses one penman block, optionally preceded by "# ::key value" metadata
// lines. Inverse roles (":X-of" with a node target) are normalized to the
// canonical direction; re-mentions of a variable become reentrant edges.
// Every non-whitespace token is consumed or a PenmanError is raised.
AmrGraph parse_penman(const std::string& text);

// L2R canonical order, single line, deterministic. Metadata is not emitted;
// see write_corpus for the full block format.
std::string serialize_penman(const AmrGraph& g);

// One parsed block of a multi-block file (blocks separated by blank lines).
struct BlockResult {
  std::size_t block_index = 0;
  std::optional<AmrGraph> graph;
  std::string error;  // empty when graph is set
};

std::vector<BlockResult> parse_penman_blocks(const std::string& text);

// Serializes blocks with their metadata lines, blank-line separated.
std::string write_corpus_text(const std::vector<AmrGraph>& graphs);

}  // namespace rgl
