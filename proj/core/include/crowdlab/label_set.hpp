#ifndef CROWDLAB_LABEL_SET_HPP_
#define CROWDLAB_LABEL_SET_HPP_

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace crowdlab {

// Bidirectional label name <-> dense id map. Ids are assigned in insertion
// order, so a label set built from a file is stable across runs.
class LabelSet {
 public:
  // Returns the id of `name`, inserting it if absent.
  int intern(const std::string& name);

  std::optional<int> find(const std::string& name) const;

  const std::string& name(int id) const;

  int size() const { return static_cast<int>(names_.size()); }

  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const LabelSet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace crowdlab

#endif  // CROWDLAB_LABEL_SET_HPP_
