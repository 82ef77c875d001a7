#include "eiknet/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "eiknet/env_io.hpp"
#include "eiknet/error.hpp"
#include "eiknet/field_io.hpp"

namespace eiknet {

namespace {

constexpr char kMagic[8] = {'E', 'I', 'K', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little-endian");

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("checkpoint truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::vector<double> to_vec(const Config& c) { return {c.data(), c.data() + c.size()}; }

Config from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Config>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TravelTimeModel Checkpoint::model() const {
  return TravelTimeModel(config, lower, upper, params, encoding);
}

Checkpoint make_checkpoint(const TravelTimeModel& model, std::map<std::string, std::string> hyper,
                           long epoch) {
  Checkpoint ck;
  ck.config = model.config();
  ck.lower = model.lower();
  ck.upper = model.upper();
  ck.params = model.params();
  ck.encoding = model.encoding_matrix();
  ck.hyper = std::move(hyper);
  ck.epoch = epoch;
  return ck;
}

std::string encode_checkpoint(const Checkpoint& ck) {
  nlohmann::ordered_json h;
  KeyValueFile kv;
  ck.config.to_keys(kv);
  nlohmann::ordered_json model;
  for (const auto& k : kv.keys()) model[k] = kv.get(k);
  h["model"] = model;
  h["dof"] = ck.config.dof;
  h["seed"] = ck.params.seed();
  h["epoch"] = ck.epoch;
  h["lower"] = to_vec(ck.lower);
  h["upper"] = to_vec(ck.upper);
  h["hyper"] = ck.hyper;
  auto layout = nlohmann::ordered_json::array();
  for (const auto& e : ck.params.layout())
    layout.push_back({{"name", e.name}, {"offset", e.offset}, {"rows", e.rows}, {"cols", e.cols}});
  h["layout"] = layout;
  h["param_count"] = ck.params.size();
  h["frozen"] = {{{"name", "encoding.B"},
                  {"rows", ck.encoding.rows()},
                  {"cols", ck.encoding.cols()}}};
  const std::string header = h.dump();

  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, header.size());
  out += header;
  for (double v : ck.params.values()) put<double>(out, v);
  for (Eigen::Index i = 0; i < ck.encoding.size(); ++i) put<double>(out, ck.encoding.data()[i]);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw Error("not a checkpoint");
  std::size_t pos = sizeof kMagic;
  const auto version = take<std::uint32_t>(bytes, pos);
  if (version != kVersion) throw Error("unsupported checkpoint version");
  const auto hlen = take<std::uint64_t>(bytes, pos);
  if (pos + hlen > bytes.size()) throw Error("checkpoint truncated");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(pos, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad checkpoint header: ") + e.what());
  }
  pos += hlen;

  Checkpoint ck;
  try {
    KeyValueFile kv;
    for (const auto& [k, v] : h.at("model").items()) kv.set(k, v.get<std::string>());
    ck.config = ModelConfig::from_keys(kv, h.at("dof").get<int>());
    ck.config.seed = h.at("seed").get<std::uint64_t>();
    ck.epoch = h.at("epoch").get<long>();
    ck.lower = from_vec(h.at("lower").get<std::vector<double>>());
    ck.upper = from_vec(h.at("upper").get<std::vector<double>>());
    ck.hyper = h.at("hyper").get<std::map<std::string, std::string>>();
    ck.params = ad::ParamStore(ck.config.seed);
    for (const auto& e : h.at("layout")) {
      const auto added =
          ck.params.add(e.at("name").get<std::string>(), e.at("rows").get<int>(), e.at("cols").get<int>());
      if (added.offset != e.at("offset").get<std::size_t>()) throw Error("checkpoint layout is not contiguous");
    }
    if (ck.params.size() != h.at("param_count").get<std::size_t>())
      throw Error("checkpoint parameter count mismatch");
    const auto& frozen = h.at("frozen").at(0);
    ck.encoding.resize(frozen.at("rows").get<Eigen::Index>(), frozen.at("cols").get<Eigen::Index>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad checkpoint header: ") + e.what());
  }
  for (double& v : ck.params.values()) v = take<double>(bytes, pos);
  for (Eigen::Index i = 0; i < ck.encoding.size(); ++i) ck.encoding.data()[i] = take<double>(bytes, pos);
  if (pos != bytes.size()) throw Error("trailing bytes in checkpoint");
  if (!ck.params.all_finite()) throw Error("checkpoint holds non-finite parameters");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_atomic(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace eiknet
