#pragma once

#include <map>
#include <string>
#include <vector>

namespace rgl {

// Shared token table for sentences and linearized graphs (one embedding
// space). Ids 0..3 are fixed specials; the rest is the sorted unique token
// set the vocab was built from.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocab();

  static Vocab build(const std::vector<std::vector<std::string>>& token_lists);

  int id(const std::string& token) const;  // kUnk when absent
  const std::string& token(int id) const;
  int size() const { return int(tokens_.size()); }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  // round trip through checkpoint header lines ("tok <token>")
  std::vector<std::string> to_lines() const;
  static Vocab from_lines(const std::vector<std::string>& lines);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
  void index();
};

}  // namespace rgl
