#include "rgl/vocab.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace rgl {

Vocab::Vocab() {
  tokens_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
  index();
}

void Vocab::index() {
  ids_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_[tokens_[i]] = int(i);
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& token_lists) {
  std::set<std::string> uniq;
  for (const auto& list : token_lists)
    for (const auto& t : list)
      if (!t.empty()) uniq.insert(t);
  Vocab v;
  for (const auto& t : uniq) {
    if (v.ids_.count(t)) continue;
    v.ids_[t] = int(v.tokens_.size());
    v.tokens_.push_back(t);
  }
  return v;
}

int Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= int(tokens_.size()))
    throw std::out_of_range("vocab id out of range: " + std::to_string(id));
  return tokens_[std::size_t(id)];
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::vector<std::string> Vocab::to_lines() const {
  std::vector<std::string> lines;
  for (std::size_t i = 4; i < tokens_.size(); ++i)
    lines.push_back("tok " + tokens_[i]);
  return lines;
}

Vocab Vocab::from_lines(const std::vector<std::string>& lines) {
  Vocab v;
  for (const auto& line : lines) {
    if (line.rfind("tok ", 0) != 0) continue;
    std::string t = line.substr(4);
    if (t.empty() || v.ids_.count(t)) continue;
    v.ids_[t] = int(v.tokens_.size());
    v.tokens_.push_back(t);
  }
  return v;
}

}  // namespace rgl
