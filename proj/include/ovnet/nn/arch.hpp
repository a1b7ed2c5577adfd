#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ovnet/common.hpp"

namespace ovnet::nn {

enum class Activation : std::uint8_t { relu = 0, tanh = 1 };

/// Feed-forward classifier shape: input width, hidden widths, output width.
///
/// Parameters of a model with this shape are flattened layer-major. For each
/// layer l mapping widths[l] -> widths[l+1], the weight matrix W_l
/// (widths[l+1] x widths[l]) is stored row-major, immediately followed by the
/// bias vector b_l. White-box watermark indices address this flat vector, so
/// the layout is frozen.
struct ArchDescriptor {
  std::vector<std::uint32_t> layer_widths;
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;

  std::size_t n_layers() const { return layer_widths.size() - 1; }
  std::uint32_t input_width() const { return layer_widths.front(); }
  std::uint32_t output_width() const { return layer_widths.back(); }
  std::size_t param_count() const;
  // Offset of W_l in the flat parameter vector; b_l starts at
  // weight_offset(l) + widths[l+1]*widths[l].
  std::size_t weight_offset(std::size_t layer) const;
  // True when flat index i addresses a weight (not a bias).
  bool is_weight(std::size_t i) const;

  void validate() const;
  Bytes canonical_bytes() const;
  static ArchDescriptor from_bytes(ByteReader& r);

  friend bool operator==(const ArchDescriptor&, const ArchDescriptor&) = default;
};

/// MLP with `hidden` layers of width `width` between `input` and `classes`.
ArchDescriptor make_mlp(std::uint32_t input, std::vector<std::uint32_t> hidden, std::uint32_t classes,
                        Activation act = Activation::relu, std::uint64_t seed = 0);

std::string to_string(Activation a);

}  // namespace ovnet::nn
