#include "crowdlab/label_set.hpp"

#include "crowdlab/error.hpp"

namespace crowdlab {

int LabelSet::intern(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(names_.size());
  names_.push_back(name);
  index_.emplace(name, id);
  return id;
}

std::optional<int> LabelSet::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& LabelSet::name(int id) const {
  if (id < 0 || id >= size()) throw Error("label id out of range: " + std::to_string(id));
  return names_[static_cast<std::size_t>(id)];
}

}  // namespace crowdlab
