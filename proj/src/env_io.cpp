#include "eiknet/env_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include "eiknet/config_file.hpp"
#include "eiknet/error.hpp"

namespace eiknet {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

OccupancyGrid build_grid(const std::vector<std::vector<std::uint8_t>>& rows, double resolution) {
  if (rows.empty()) throw Error("map has no rows");
  const int ny = static_cast<int>(rows.size());
  const int nx = static_cast<int>(rows.front().size());
  for (const auto& r : rows)
    if (static_cast<int>(r.size()) != nx) throw Error("map rows differ in length");
  const double h = resolution > 0.0 ? resolution : 1.0 / (std::max(nx, ny) - 1);
  OccupancyGrid grid(GridShape({nx, ny, 1}, 2, h));
  for (int r = 0; r < ny; ++r) {
    const int j = ny - 1 - r;
    for (int i = 0; i < nx; ++i) grid.occupied[grid.shape.index(i, j)] = rows[r][i];
  }
  distance_transform(grid);
  return grid;
}

}  // namespace

OccupancyGrid parse_text_map(const std::string& text, double resolution) {
  std::vector<std::vector<std::uint8_t>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    std::vector<std::uint8_t> row;
    for (char c : line) {
      if (c == '#') row.push_back(1);
      else if (c == '.') row.push_back(0);
      else throw Error(std::string("unexpected map character '") + c + "'");
    }
    rows.push_back(std::move(row));
  }
  return build_grid(rows, resolution);
}

OccupancyGrid parse_pgm_map(const std::string& bytes, double resolution) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw Error("truncated PGM header");
    return bytes.substr(start, pos - start);
  };
  const std::string magic = next_token();
  if (magic != "P5" && magic != "P2") throw Error("not a PGM file");
  const int w = std::stoi(next_token());
  const int hgt = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (w < 2 || hgt < 2 || maxval <= 0 || maxval > 255) throw Error("unsupported PGM geometry");
  std::vector<std::vector<std::uint8_t>> rows(hgt, std::vector<std::uint8_t>(w));
  if (magic == "P5") {
    ++pos;  // single whitespace after maxval
    if (bytes.size() < pos + static_cast<std::size_t>(w) * hgt) throw Error("truncated PGM data");
    for (int r = 0; r < hgt; ++r)
      for (int c = 0; c < w; ++c) {
        const auto v = static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(r) * w + c]);
        rows[r][c] = v < 128 ? 1 : 0;
      }
  } else {
    for (int r = 0; r < hgt; ++r)
      for (int c = 0; c < w; ++c) rows[r][c] = std::stoi(next_token()) < 128 ? 1 : 0;
  }
  return build_grid(rows, resolution);
}

PlanarArm parse_arm_config(const std::string& text) {
  const KeyValueFile kv = KeyValueFile::parse(text);
  PlanarArm arm;
  arm.link_lengths = kv.get_doubles("links");
  if (kv.has("base")) {
    const auto b = kv.get_doubles("base");
    if (b.size() != 2) throw Error("base needs 2 values");
    arm.base = {b[0], b[1]};
  }
  const auto limits = kv.get_doubles("limits");
  if (limits.size() == 2) {
    arm.joint_lo.assign(arm.link_lengths.size(), limits[0]);
    arm.joint_hi.assign(arm.link_lengths.size(), limits[1]);
  } else if (limits.size() == 2 * arm.link_lengths.size()) {
    for (std::size_t i = 0; i < arm.link_lengths.size(); ++i) {
      arm.joint_lo.push_back(limits[2 * i]);
      arm.joint_hi.push_back(limits[2 * i + 1]);
    }
  } else {
    throw Error("limits needs 2 or 2*links values");
  }
  for (const auto& d : kv.all("disc")) {
    const auto v = parse_doubles(d);
    if (v.size() != 3) throw Error("disc needs cx cy r");
    arm.obstacles.emplace_back(Disc{{v[0], v[1]}, v[2]});
  }
  for (const auto& b : kv.all("box")) {
    const auto v = parse_doubles(b);
    if (v.size() != 4) throw Error("box needs xmin ymin xmax ymax");
    arm.obstacles.emplace_back(Box{{v[0], v[1]}, {v[2], v[3]}});
  }
  arm.validate();
  return arm;
}

Environment load_environment(const std::filesystem::path& path, const EnvOptions& opts) {
  const std::string ext = path.extension().string();
  const std::string data = read_file(path);
  auto apply = [&](SpeedParams p) {
    if (opts.d_max) p.d_max = *opts.d_max;
    if (opts.d_min) p.d_min = *opts.d_min;
    else if (opts.d_max) p.d_min = 0.2 * p.d_max;
    return p;
  };
  if (ext == ".arm") {
    PlanarArm arm = parse_arm_config(data);
    const KeyValueFile kv = KeyValueFile::parse(data);
    SpeedParams p = Environment::default_speed(arm);
    p.d_max = kv.get_double("d_max", p.d_max);
    p.d_min = kv.get_double("d_min", 0.2 * p.d_max);
    return Environment(std::move(arm), apply(p));
  }
  OccupancyGrid grid;
  const double res = opts.resolution.value_or(0.0);
  if (ext == ".pgm") grid = parse_pgm_map(data, res);
  else if (ext == ".txt" || ext == ".map") grid = parse_text_map(data, res);
  else throw Error("unknown environment format '" + ext + "'");
  const SpeedParams p = apply(Environment::default_speed(grid));
  return Environment(std::move(grid), p);
}

}  // namespace eiknet
