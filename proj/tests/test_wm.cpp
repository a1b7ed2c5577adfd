#include <gtest/gtest.h>

#include <cmath>

#include "ovnet/bench.hpp"
#include "ovnet/rng.hpp"
#include "ovnet/wm/scheme.hpp"

using namespace ovnet;
using wm::SchemeId;

namespace {

const bench::Benchmark& bench0() {
  static const auto b = bench::make_benchmark(0);
  return b;
}

class Schemes : public ::testing::TestWithParam<SchemeId> {};

// log10 of P[Binomial(n, p) >= k].
double log10_tail(int n, double p, int k) {
  double s = 0.0;
  for (int i = k; i <= n; ++i)
    s += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) + i * std::log(p) +
                  (n - i) * std::log1p(-p));
  return std::log10(s);
}

}  // namespace

TEST_P(Schemes, CorrectnessOnBenchmark) {
  const auto& b = bench0();
  const auto s = GetParam();
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto key = wm::gen(s, 128, b.arch, 100 + i, b.spec.scheme);
    const auto r = wm::embed(b.clean, key, b.train, b.embed_cfg(i), b.spec.scheme);
    EXPECT_TRUE(wm::verify(r.model, key, r.verifier));
    EXPECT_FALSE(wm::verify(b.clean, key, r.verifier));
    const auto other = wm::gen(s, 128, b.arch, 900 + i, b.spec.scheme);
    EXPECT_FALSE(wm::verify(r.model, other, wm::make_verifier(other, b.arch, b.spec.scheme)));
  }
}

TEST_P(Schemes, EmbedIsDeterministic) {
  const auto& b = bench0();
  const auto key = wm::gen(GetParam(), 128, b.arch, 3, b.spec.scheme);
  const auto r1 = wm::embed(b.clean, key, b.train, b.embed_cfg(), b.spec.scheme);
  const auto r2 = wm::embed(b.clean, key, b.train, b.embed_cfg(), b.spec.scheme);
  EXPECT_TRUE(nn::bit_identical(r1.model, r2.model));
  EXPECT_EQ(r1.verifier, r2.verifier);
}

TEST_P(Schemes, KeyAndVerifierRoundTrip) {
  const auto& b = bench0();
  const auto key = wm::gen(GetParam(), 128, b.arch, 4, b.spec.scheme);
  EXPECT_EQ(wm::WatermarkKey::deserialize(key.serialize()), key);
  const auto v = wm::make_verifier(key, b.arch, b.spec.scheme);
  EXPECT_EQ(wm::Verifier::deserialize(v.serialize()), v);
  auto bytes = key.serialize();
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(wm::WatermarkKey::deserialize(bytes), FormatError);
  EXPECT_THROW(wm::Verifier::deserialize(Bytes{0x00, 0x01}), FormatError);
}

TEST_P(Schemes, VerifierIsBoundToArchAndKey) {
  const auto& b = bench0();
  const auto key = wm::gen(GetParam(), 128, b.arch, 5, b.spec.scheme);
  const auto other = wm::gen(GetParam(), 128, b.arch, 6, b.spec.scheme);
  auto arch2 = b.arch;
  arch2.seed += 1;
  EXPECT_THROW(wm::verify(b.clean, key, wm::make_verifier(key, arch2, b.spec.scheme)), BindingError);
  EXPECT_THROW(wm::verify(b.clean, key, wm::make_verifier(other, b.arch, b.spec.scheme)), BindingError);
}

TEST_P(Schemes, GenIsDeterministicInSeed) {
  const auto& b = bench0();
  EXPECT_EQ(wm::gen(GetParam(), 128, b.arch, 8, b.spec.scheme), wm::gen(GetParam(), 128, b.arch, 8, b.spec.scheme));
  EXPECT_NE(wm::gen(GetParam(), 128, b.arch, 8, b.spec.scheme), wm::gen(GetParam(), 128, b.arch, 9, b.spec.scheme));
}

INSTANTIATE_TEST_SUITE_P(Both, Schemes, ::testing::Values(SchemeId::ParamEmbed, SchemeId::TriggerBackdoor),
                         [](const auto& info) { return wm::to_string(info.param); });

TEST(ParamEmbed, DirectOverwriteOracle) {
  const auto& b = bench0();
  const auto key = wm::gen(SchemeId::ParamEmbed, 128, b.arch, 11, b.spec.scheme);
  auto m = b.clean;
  const auto& p = key.params();
  for (std::size_t i = 0; i < p.indices.size(); ++i) m.params(static_cast<Eigen::Index>(p.indices[i])) = p.digits[i];
  const auto v = wm::make_verifier(key, b.arch, b.spec.scheme);
  EXPECT_TRUE(wm::verify(m, key, v));
  EXPECT_EQ(wm::max_deviation(m, p), 0.0);
  // One digit pushed just past tolerance breaks verification.
  m.params(static_cast<Eigen::Index>(p.indices[0])) += b.spec.scheme.param_tolerance * 1.01;
  EXPECT_FALSE(wm::verify(m, key, v));
}

TEST(ParamEmbed, AvoidGivesDisjointPositions) {
  const auto& b = bench0();
  std::vector<wm::WatermarkKey> keys;
  for (std::uint64_t i = 0; i < 30; ++i) keys.push_back(wm::gen(SchemeId::ParamEmbed, 128, b.arch, i, b.spec.scheme, keys));
  EXPECT_NO_THROW(wm::require_disjoint(keys));
  std::vector<wm::WatermarkKey> clash{keys[0], keys[0]};
  EXPECT_THROW(wm::require_disjoint(clash), InvalidParameter);
}

TEST(ParamEmbed, DigitsRespectRange) {
  const auto& b = bench0();
  const auto key = wm::gen(SchemeId::ParamEmbed, 128, b.arch, 12, b.spec.scheme);
  ASSERT_EQ(key.params().digits.size(), static_cast<std::size_t>(b.spec.scheme.digit_count));
  for (double d : key.params().digits) {
    EXPECT_GE(std::abs(d), b.spec.scheme.digit_min);
    EXPECT_LE(std::abs(d), b.spec.scheme.digit_max);
  }
  for (auto i : key.params().indices) EXPECT_TRUE(b.arch.is_weight(i));
}

TEST(ParamEmbed, PositionsAreInteriorWeights) {
  const nn::ArchDescriptor deep{{3, 4, 5, 2}, nn::Activation::relu, 0};
  const auto pos = wm::param_positions(deep);
  ASSERT_EQ(pos.size(), 20u);
  EXPECT_EQ(pos.front(), deep.weight_offset(1));
  for (auto i : pos) EXPECT_TRUE(deep.is_weight(i));
  // No hidden-to-hidden layer: every weight, no bias.
  const nn::ArchDescriptor shallow{{3, 4, 2}, nn::Activation::relu, 0};
  EXPECT_EQ(wm::param_positions(shallow).size(), 12u + 8u);
  for (auto i : wm::param_positions(shallow)) EXPECT_TRUE(shallow.is_weight(i));
  wm::SchemeConfig c;
  c.digit_count = 21;
  EXPECT_THROW(wm::gen(SchemeId::ParamEmbed, 128, deep, 1, c), InvalidParameter);
}

TEST(Gen, RejectsOversizedPayloadAndWeakN) {
  const nn::ArchDescriptor tiny{{2, 3, 2}, nn::Activation::relu, 0};
  wm::SchemeConfig c;
  c.digit_count = 1000;
  EXPECT_THROW(wm::gen(SchemeId::ParamEmbed, 128, tiny, 1, c), InvalidParameter);
  EXPECT_THROW(wm::gen(SchemeId::ParamEmbed, 32, tiny, 1), InvalidParameter);
}

TEST(Gen, SchemeNames) {
  EXPECT_EQ(wm::scheme_from_string("param"), SchemeId::ParamEmbed);
  EXPECT_EQ(wm::scheme_from_string("TriggerBackdoor"), SchemeId::TriggerBackdoor);
  EXPECT_THROW(wm::scheme_from_string("rand"), InvalidParameter);
}

// A model that has never seen the triggers labels each one correctly with
// probability about 1/classes. The false-accept bound for the threshold is a
// binomial tail.
TEST(TriggerBackdoor, FalseAcceptBoundIsSmall) {
  const wm::SchemeConfig c;
  const int need = static_cast<int>(std::ceil(c.trigger_threshold * c.trigger_count));
  EXPECT_LT(log10_tail(c.trigger_count, 0.25, need), -4.0);
}

TEST(TriggerBackdoor, CleanTriggerAccuracyNearChance) {
  const auto& b = bench0();
  double sum = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto key = wm::gen(SchemeId::TriggerBackdoor, 128, b.arch, 200 + i, b.spec.scheme);
    sum += wm::trigger_accuracy(b.clean, key.triggers());
  }
  EXPECT_LT(sum / 20, b.spec.scheme.trigger_threshold - 0.2);
}

TEST(EmbedMany, AllVerifyAndFailureNamesIndex) {
  const auto& b = bench0();
  std::vector<wm::WatermarkKey> keys;
  for (std::uint64_t i = 0; i < 4; ++i) keys.push_back(wm::gen(SchemeId::ParamEmbed, 128, b.arch, 40 + i, b.spec.scheme, keys));
  const auto r = wm::embed_many(b.clean, keys, b.train, b.embed_cfg(), b.spec.scheme);
  for (std::size_t i = 0; i < keys.size(); ++i) EXPECT_TRUE(wm::verify(r.model, keys[i], r.verifiers[i]));

  auto cfg = b.embed_cfg();
  cfg.epochs = 1;
  std::vector<wm::WatermarkKey> many;
  for (std::uint64_t i = 0; i < 12; ++i) many.push_back(wm::gen(SchemeId::TriggerBackdoor, 128, b.arch, 60 + i, b.spec.scheme));
  try {
    wm::embed_many(b.clean, many, b.train, cfg, b.spec.scheme);
    FAIL() << "expected EmbedFailure";
  } catch (const EmbedFailure& e) {
    EXPECT_LT(e.index, many.size());
    EXPECT_NE(std::string(e.what()).find("watermark " + std::to_string(e.index)), std::string::npos);
  }
}
