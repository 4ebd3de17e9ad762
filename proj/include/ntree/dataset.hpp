#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace ntree {

using ObjectId = std::int64_t;

template <class Obj>
struct Dataset {
  std::vector<ObjectId> ids;
  std::vector<Obj> objects;

  std::size_t size() const { return objects.size(); }

  void add(ObjectId id, Obj obj) {
    ids.push_back(id);
    objects.push_back(std::move(obj));
  }
};

}  // namespace ntree
