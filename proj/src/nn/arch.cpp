#include "ovnet/nn/arch.hpp"

namespace ovnet::nn {

namespace {
constexpr std::uint8_t kArchMagic[4] = {'O', 'V', 'N', 'A'};
constexpr std::uint8_t kArchVersion = 1;
}  // namespace

std::size_t ArchDescriptor::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l)
    n += std::size_t{layer_widths[l + 1]} * layer_widths[l] + layer_widths[l + 1];
  return n;
}

std::size_t ArchDescriptor::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l)
    off += std::size_t{layer_widths[l + 1]} * layer_widths[l] + layer_widths[l + 1];
  return off;
}

bool ArchDescriptor::is_weight(std::size_t i) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l) {
    const std::size_t nw = std::size_t{layer_widths[l + 1]} * layer_widths[l];
    if (i < off + nw) return true;
    off += nw + layer_widths[l + 1];
    if (i < off) return false;
  }
  throw RangeError("parameter index out of range");
}

void ArchDescriptor::validate() const {
  if (layer_widths.size() < 2) throw InvalidParameter("architecture needs at least 2 layers");
  for (auto w : layer_widths)
    if (w == 0) throw InvalidParameter("layer widths must be positive");
  if (activation != Activation::relu && activation != Activation::tanh)
    throw InvalidParameter("unknown activation");
}

Bytes ArchDescriptor::canonical_bytes() const {
  validate();
  ByteWriter w;
  w.raw(kArchMagic);
  w.u8(kArchVersion);
  w.u32(static_cast<std::uint32_t>(layer_widths.size()));
  for (auto width : layer_widths) w.u32(width);
  w.u8(static_cast<std::uint8_t>(activation));
  w.u64(seed);
  return std::move(w).take();
}

ArchDescriptor ArchDescriptor::from_bytes(ByteReader& r) {
  auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kArchMagic)) throw FormatError("bad architecture magic");
  if (r.u8() != kArchVersion) throw FormatError("unsupported architecture version");
  ArchDescriptor a;
  const auto n = r.u32();
  if (n > 1024) throw FormatError("implausible layer count");
  a.layer_widths.resize(n);
  for (auto& w : a.layer_widths) w = r.u32();
  const auto act = r.u8();
  if (act > 1) throw FormatError("unknown activation tag");
  a.activation = static_cast<Activation>(act);
  a.seed = r.u64();
  a.validate();
  return a;
}

ArchDescriptor make_mlp(std::uint32_t input, std::vector<std::uint32_t> hidden, std::uint32_t classes,
                        Activation act, std::uint64_t seed) {
  ArchDescriptor a;
  a.layer_widths.push_back(input);
  a.layer_widths.insert(a.layer_widths.end(), hidden.begin(), hidden.end());
  a.layer_widths.push_back(classes);
  a.activation = act;
  a.seed = seed;
  a.validate();
  return a;
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

}  // namespace ovnet::nn
