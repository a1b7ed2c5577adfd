#include "ovnet/nn/model.hpp"

#include <cmath>
#include <cstring>

#include "ovnet/rng.hpp"

namespace ovnet::nn {

Model init_model(const ArchDescriptor& arch) {
  arch.validate();
  Model m{arch, Vec<double>::Zero(static_cast<Eigen::Index>(arch.param_count()))};
  Rng rng(derive_seed(arch.seed, {0x1417}));
  for (std::size_t l = 0; l < arch.n_layers(); ++l) {
    const auto in = arch.layer_widths[l];
    const auto out = arch.layer_widths[l + 1];
    const double bound = std::sqrt(6.0 / in);
    const auto off = arch.weight_offset(l);
    for (std::size_t i = 0; i < std::size_t{in} * out; ++i)
      m.params(static_cast<Eigen::Index>(off + i)) = rng.uniform(-bound, bound);
  }
  return m;
}

void check_model(const Model& m) {
  m.arch.validate();
  if (static_cast<std::size_t>(m.params.size()) != m.arch.param_count())
    throw ShapeError("parameter vector does not match architecture");
  if (!m.params.allFinite()) throw ShapeError("non-finite parameter");
}

Bytes serialize(const Model& m) {
  check_model(m);
  ByteWriter w;
  w.raw(m.arch.canonical_bytes());
  w.u64(static_cast<std::uint64_t>(m.params.size()));
  for (Eigen::Index i = 0; i < m.params.size(); ++i) w.f64(m.params(i));
  return std::move(w).take();
}

Model deserialize_model(ByteView b) {
  ByteReader r(b);
  Model m;
  m.arch = ArchDescriptor::from_bytes(r);
  const auto n = r.u64();
  if (n != m.arch.param_count()) throw FormatError("parameter count does not match architecture");
  m.params.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.params.size(); ++i) m.params(i) = r.f64();
  r.expect_done();
  check_model(m);
  return m;
}

bool bit_identical(const Model& a, const Model& b) {
  return a.arch == b.arch && a.params.size() == b.params.size() &&
         std::memcmp(a.params.data(), b.params.data(), sizeof(double) * a.params.size()) == 0;
}

}  // namespace ovnet::nn
