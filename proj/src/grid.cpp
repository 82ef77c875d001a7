#include "eiknet/grid.hpp"

#include <algorithm>
#include <cmath>

#include "eiknet/error.hpp"

namespace eiknet {

GridShape::GridShape(std::array<int, 3> size_, int dims_, double h_,
                     std::array<double, 3> origin_)
    : dims(dims_), size(size_), h(h_), origin(origin_) {
  if (dims != 2 && dims != 3) throw Error("grid dims must be 2 or 3");
  if (!(h > 0.0)) throw Error("grid resolution must be positive");
  if (dims == 2) size[2] = 1;
  for (int d = 0; d < dims; ++d)
    if (size[d] < 2) throw Error("grid needs at least 2 nodes per axis");
}

std::array<int, 3> GridShape::coords(std::size_t idx) const {
  const int i = static_cast<int>(idx % size[0]);
  const std::size_t rest = idx / size[0];
  const int j = static_cast<int>(rest % size[1]);
  const int k = static_cast<int>(rest / size[1]);
  return {i, j, k};
}

Config GridShape::position(std::size_t idx) const {
  const auto c = coords(idx);
  Config q(dims);
  for (int d = 0; d < dims; ++d) q[d] = origin[d] + h * c[d];
  return q;
}

Config GridShape::lower() const {
  Config q(dims);
  for (int d = 0; d < dims; ++d) q[d] = origin[d];
  return q;
}

Config GridShape::upper() const {
  Config q(dims);
  for (int d = 0; d < dims; ++d) q[d] = origin[d] + h * (size[d] - 1);
  return q;
}

bool GridShape::contains(const Config& q) const {
  if (q.size() != dims) return false;
  for (int d = 0; d < dims; ++d) {
    const double hi = origin[d] + h * (size[d] - 1);
    if (!(q[d] >= origin[d] && q[d] <= hi)) return false;
  }
  return true;
}

std::size_t GridShape::nearest(const Config& q) const {
  std::array<int, 3> c{0, 0, 0};
  for (int d = 0; d < dims; ++d) {
    const long r = std::lround((q[d] - origin[d]) / h);
    c[d] = static_cast<int>(std::clamp<long>(r, 0, size[d] - 1));
  }
  return index(c[0], c[1], c[2]);
}

namespace {

struct Cell {
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
};

Cell locate(const GridShape& s, const Config& q) {
  if (!s.contains(q)) throw Error("out of domain");
  Cell c;
  for (int d = 0; d < s.dims; ++d) {
    const double t = (q[d] - s.origin[d]) / s.h;
    const int i = std::clamp(static_cast<int>(std::floor(t)), 0, s.size[d] - 2);
    c.base[d] = i;
    c.frac[d] = std::clamp(t - i, 0.0, 1.0);
  }
  return c;
}

}  // namespace

double GridField::interpolate(const Config& q) const {
  Config unused;
  return interpolate(q, unused);
}

double GridField::interpolate(const Config& q, Config& gradient) const {
  const Cell c = locate(shape, q);
  const int dims = shape.dims;
  const int corners = 1 << dims;
  gradient = Config::Zero(dims);
  double value = 0.0;
  std::array<double, 8> cv{};
  for (int m = 0; m < corners; ++m) {
    std::array<int, 3> n = c.base;
    for (int d = 0; d < dims; ++d) n[d] += (m >> d) & 1;
    cv[m] = values[shape.index(n[0], n[1], n[2])];
    if (!std::isfinite(cv[m])) return cv[m];
  }
  for (int m = 0; m < corners; ++m) {
    double w = 1.0;
    for (int d = 0; d < dims; ++d) w *= ((m >> d) & 1) ? c.frac[d] : 1.0 - c.frac[d];
    value += w * cv[m];
    for (int g = 0; g < dims; ++g) {
      double wg = ((m >> g) & 1) ? 1.0 : -1.0;
      for (int d = 0; d < dims; ++d) {
        if (d == g) continue;
        wg *= ((m >> d) & 1) ? c.frac[d] : 1.0 - c.frac[d];
      }
      gradient[g] += wg * cv[m] / shape.h;
    }
  }
  return value;
}

std::size_t OccupancyGrid::free_count() const {
  return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), 0));
}

namespace {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), in place on f.
void edt_1d(std::vector<double>& f, std::vector<int>& v, std::vector<double>& z,
            std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates everywhere.
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

void distance_transform(OccupancyGrid& grid) {
  const GridShape& s = grid.shape;
  if (grid.occupied.size() != s.count()) throw Error("occupancy shape mismatch");
  if (grid.free_count() == 0) throw Error("no free space");

  std::vector<double> sq(s.count());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = grid.is_occupied(i) ? 0.0 : kInf;

  const int longest = *std::max_element(s.size.begin(), s.size.end());
  std::vector<double> f(longest), out(longest), z(longest + 1);
  std::vector<int> v(longest);
  for (int axis = 0; axis < s.dims; ++axis) {
    const int n = s.size[axis];
    f.resize(n);
    out.resize(n);
    std::array<int, 3> c{0, 0, 0};
    const int o1 = (axis + 1) % 3, o2 = (axis + 2) % 3;
    for (c[o2] = 0; c[o2] < s.size[o2]; ++c[o2]) {
      for (c[o1] = 0; c[o1] < s.size[o1]; ++c[o1]) {
        for (c[axis] = 0; c[axis] < n; ++c[axis]) f[c[axis]] = sq[s.index(c[0], c[1], c[2])];
        edt_1d(f, v, z, out);
        for (c[axis] = 0; c[axis] < n; ++c[axis]) sq[s.index(c[0], c[1], c[2])] = out[c[axis]];
      }
    }
  }

  grid.clearance = GridField(s, kInf);
  for (std::size_t i = 0; i < sq.size(); ++i)
    grid.clearance[i] = std::isfinite(sq[i]) ? std::sqrt(sq[i]) * s.h : kInf;
}

}  // namespace eiknet
