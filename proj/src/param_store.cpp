#include "eiknet/param_store.hpp"

#include <algorithm>
#include <cmath>

#include "eiknet/error.hpp"

namespace eiknet::ad {

ParamEntry ParamStore::add(const std::string& name, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw Error("parameter block must be non-empty");
  for (const auto& e : layout_)
    if (e.name == name) throw Error("duplicate parameter '" + name + "'");
  ParamEntry e{name, values_.size(), rows, cols};
  values_.resize(values_.size() + e.size(), 0.0);
  layout_.push_back(e);
  return layout_.back();
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
  for (const auto& e : layout_)
    if (e.name == name) return e;
  throw Error("unknown parameter '" + name + "'");
}

const std::string& ParamStore::owner(std::size_t i) const {
  for (const auto& e : layout_)
    if (i >= e.offset && i < e.offset + e.size()) return e.name;
  throw Error("parameter index out of range");
}

bool ParamStore::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace eiknet::ad
