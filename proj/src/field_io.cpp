#include "eiknet/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "eiknet/config_file.hpp"
#include "eiknet/error.hpp"

namespace eiknet {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const double* v, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ',';
    s += fmt(v[i]);
  }
  return s;
}

}  // namespace

std::string field_to_csv(const GridField& field, const std::string& provenance) {
  const GridShape& s = field.shape;
  std::string out = "# dims=" + std::to_string(s.size[0]) + "," + std::to_string(s.size[1]);
  if (s.dims == 3) out += "," + std::to_string(s.size[2]);
  out += " h=" + fmt(s.h) + " origin=" + join(s.origin.data(), s.dims) + "\n";
  if (!provenance.empty()) out += "# " + provenance + "\n";
  for (int k = 0; k < s.size[2]; ++k)
    for (int j = 0; j < s.size[1]; ++j) {
      for (int i = 0; i < s.size[0]; ++i) {
        if (i) out += ',';
        out += fmt(field[s.index(i, j, k)]);
      }
      out += '\n';
    }
  return out;
}

GridField field_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header) || header.rfind("# dims=", 0) != 0)
    throw Error("field CSV lacks header");
  std::istringstream hs(header.substr(2));
  std::string tok;
  std::vector<double> dims, h, origin;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "dims") dims = parse_doubles(val);
    else if (key == "h") h = parse_doubles(val);
    else if (key == "origin") origin = parse_doubles(val);
  }
  if ((dims.size() != 2 && dims.size() != 3) || h.size() != 1 || origin.size() != dims.size())
    throw Error("malformed field CSV header");
  std::array<int, 3> size{1, 1, 1};
  std::array<double, 3> org{0, 0, 0};
  for (std::size_t d = 0; d < dims.size(); ++d) {
    size[d] = static_cast<int>(dims[d]);
    org[d] = origin[d];
  }
  GridField field(GridShape(size, static_cast<int>(dims.size()), h[0], org), 0.0);
  std::size_t idx = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      if (idx >= field.values.size()) throw Error("field CSV has too many values");
      field.values[idx++] = std::strtod(cell.c_str(), nullptr);
    }
  }
  if (idx != field.values.size()) throw Error("field CSV has too few values");
  return field;
}

PgmExport field_to_pgm16(const GridField& field) {
  const GridShape& s = field.shape;
  double lo = kInf, hi = -kInf;
  for (double v : field.values)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const double scale = hi > lo ? 65534.0 / (hi - lo) : 0.0;

  const int width = s.size[0];
  const int height = s.size[1] * s.size[2];
  PgmExport out;
  out.pgm = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n65535\n";
  out.pgm.reserve(out.pgm.size() + static_cast<std::size_t>(width) * height * 2);
  for (int k = 0; k < s.size[2]; ++k)
    for (int j = s.size[1] - 1; j >= 0; --j)
      for (int i = 0; i < width; ++i) {
        const double v = field[s.index(i, j, k)];
        unsigned p = 65535;
        if (std::isfinite(v)) p = static_cast<unsigned>(std::lround((v - lo) * scale));
        out.pgm.push_back(static_cast<char>((p >> 8) & 0xff));
        out.pgm.push_back(static_cast<char>(p & 0xff));
      }
  out.sidecar = "min = " + fmt(lo) + "\nmax = " + fmt(hi) + "\nscale = " + fmt(scale) +
                "\nnonfinite_pixel = 65535\n# value = min + pixel / scale\n";
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& data) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace eiknet
