#include "auvox/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "json.hpp"

namespace auvox {
namespace {

constexpr char kMagic[4] = {'A', 'U', 'N', 'N'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw BadMagicError("checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string save_checkpoint(Network<float>& net, const std::string& provenance_json) {
  nlohmann::json meta = nlohmann::json::parse(descriptor_to_json(net.descriptor()));
  meta["seed"] = net.seed();
  if (!provenance_json.empty()) {
    try {
      meta["provenance"] = nlohmann::json::parse(provenance_json);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("provenance is not valid JSON: ") + e.what());
    }
  }
  const std::string meta_str = meta.dump();

  std::string out(kMagic, 4);
  out.push_back(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(meta_str.size()));
  out += meta_str;

  auto params = net.params();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    out.push_back(static_cast<char>(p.value->rank()));
    for (std::size_t d : p.value->dims()) put_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < p.value->size(); ++i) put_f32(out, (*p.value)[i]);
  }
  return out;
}

LoadedCheckpoint load_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.str(4) != std::string(kMagic, 4)) throw BadMagicError("not an AUNN checkpoint");
  const std::uint8_t version = r.u8();
  if (version != kVersion)
    throw VersionMismatchError("unsupported checkpoint version " + std::to_string(version));

  const std::uint32_t meta_len = r.u32();
  const std::string meta_str = r.str(meta_len);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_str);
  } catch (const nlohmann::json::exception& e) {
    throw BadMagicError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  ArchitectureDescriptor desc = descriptor_from_json(meta_str);
  std::uint64_t seed = meta.value("seed", std::uint64_t(0));
  std::string provenance =
      meta.contains("provenance") ? meta.at("provenance").dump() : std::string();

  // Stage every tensor before touching a network.
  struct Staged {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<float> data;
  };
  const std::uint32_t tensor_count = r.u32();
  std::vector<Staged> staged;
  staged.reserve(tensor_count);
  for (std::uint32_t i = 0; i < tensor_count; ++i) {
    Staged s;
    s.name = r.str(r.u32());
    const std::uint8_t rank = r.u8();
    std::size_t n = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      s.dims.push_back(r.u32());
      n *= s.dims.back();
    }
    s.data.resize(rank == 0 ? 0 : n);
    for (auto& f : s.data) f = r.f32();
    staged.push_back(std::move(s));
  }
  if (!r.done()) throw BadMagicError("checkpoint has trailing bytes");

  LoadedCheckpoint out{Network<float>(desc, seed), provenance};
  auto params = out.network.params();
  if (params.size() != staged.size())
    throw ShapeMismatchError("checkpoint tensor count does not match the descriptor");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != staged[i].name || params[i].value->dims() != staged[i].dims)
      throw ShapeMismatchError("checkpoint tensor '" + staged[i].name +
                               "' does not match the descriptor");
    std::copy(staged[i].data.begin(), staged[i].data.end(), params[i].value->data());
  }
  return out;
}

LoadedCheckpoint load_checkpoint_expect(const std::string& bytes, Variant expected) {
  LoadedCheckpoint lc = load_checkpoint(bytes);
  if (lc.network.descriptor().variant != expected)
    throw ShapeMismatchError("checkpoint holds a " +
                             variant_name(lc.network.descriptor().variant) +
                             " network, expected " + variant_name(expected));
  return lc;
}

}  // namespace auvox
