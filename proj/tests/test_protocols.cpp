#include <gtest/gtest.h>

#include <fstream>

#include "ovnet/adversary/attacks.hpp"
#include "ovnet/bench.hpp"
#include "ovnet/protocols/central.hpp"
#include "ovnet/protocols/decentral.hpp"
#include "ovnet/protocols/scenario.hpp"

using namespace ovnet;
using namespace ovnet::protocols;
using wm::SchemeId;

namespace {

struct Fixture {
  bench::Benchmark b = bench::make_benchmark(2);
  wm::WatermarkKey key = wm::gen(SchemeId::ParamEmbed, 128, b.arch, 31, b.spec.scheme);
  wm::EmbedResult marked = wm::embed(b.clean, key, b.train, b.embed_cfg(), b.spec.scheme);
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

NetworkConfig net_cfg(std::size_t agents, std::size_t malicious, double participation = 1.0) {
  NetworkConfig c;
  c.agents = agents;
  c.malicious = malicious;
  c.participation = participation;
  c.seed = 17;
  return c;
}

}  // namespace

TEST(Notary, TokensAndIdempotentRegistration) {
  const auto& f = fx();
  Notary n(1);
  const auto a = central_register(n, "alice", f.key, f.marked.verifier);
  EXPECT_TRUE(n.check_token(a));
  const auto again = central_register(n, "alice", f.key, f.marked.verifier);
  EXPECT_EQ(again.seq, a.seq);
  EXPECT_EQ(again.token, a.token);
  EXPECT_EQ(n.registered("alice").size(), 1u);
  auto forged = a;
  forged.seq += 1;
  EXPECT_FALSE(n.check_token(forged));
  forged = a;
  forged.owner = "mallory";
  EXPECT_FALSE(n.check_token(forged));
  Notary other(2);
  EXPECT_FALSE(other.check_token(a));
}

TEST(Notary, VerifyPublishesAndRuleTakesEarliest) {
  const auto& f = fx();
  Notary n(1);
  central_register(n, "alice", f.key, f.marked.verifier);
  EXPECT_TRUE(central_verify(n, "alice", f.marked.model));
  EXPECT_FALSE(central_verify(n, "alice", f.b.clean));
  ASSERT_EQ(n.published().size(), 2u);
  EXPECT_TRUE(n.published()[0].verdict);
  EXPECT_FALSE(n.published()[1].verdict);

  const auto ow = adv::overwrite(f.marked.model, SchemeId::ParamEmbed, f.b.train, f.b.embed_cfg(3), 555, f.b.spec.scheme);
  central_register(n, "mallory", ow.key, ow.verifier);
  const std::vector<std::string> both{"mallory", "alice"};
  EXPECT_EQ(n.rule(ow.model, both), std::optional<std::string>("alice"));
  const std::vector<std::string> only{"mallory"};
  EXPECT_EQ(n.rule(f.marked.model, only), std::nullopt);
}

TEST(Decentral, HonestMajorityVerdicts) {
  const auto& f = fx();
  Network net(net_cfg(5, 0));
  const auto owner = crypto::KeyPair::from_seed(77);
  net.add_participant(owner.verifying_key());
  decentral_commit(net.community(), owner, f.key, f.marked.verifier, f.b.arch);
  const auto yes = decentral_ov(net, owner, f.marked.model, f.key, f.marked.verifier);
  EXPECT_EQ(yes.verdict, std::optional<bool>(true));
  EXPECT_EQ(yes.yes, 5u);
  EXPECT_EQ(yes.timestamp, std::optional<std::uint64_t>(0));
  EXPECT_TRUE(yes.anchored);
  const auto no = decentral_ov(net, owner, f.b.clean, f.key, f.marked.verifier);
  EXPECT_EQ(no.verdict, std::optional<bool>(false));
  EXPECT_TRUE(net.community().audit().ok);
  EXPECT_EQ(net.broadcasts().size(), 2u);
  const auto& c = net.community();
  EXPECT_EQ(c.agent(owner.verifying_key()).credits, c.config().endowment - 2 * c.config().ov_fee);
  EXPECT_EQ(c.total_credits(), 6 * c.config().endowment + c.minted() - c.burned());
}

TEST(Decentral, MaliciousMinorityCannotFlipMajorityCan) {
  const auto& f = fx();
  for (std::size_t bad : {0u, 1u, 2u, 3u, 5u}) {
    Network net(net_cfg(5, bad));
    const auto owner = crypto::KeyPair::from_seed(78);
    net.add_participant(owner.verifying_key());
    const auto r = decentral_ov(net, owner, f.marked.model, f.key, f.marked.verifier);
    EXPECT_EQ(r.verdict, std::optional<bool>(bad < 3)) << bad << " malicious";
    EXPECT_EQ(r.no, bad);
  }
}

TEST(Decentral, NoParticipationIsInconclusive) {
  const auto& f = fx();
  Network net(net_cfg(5, 0, 0.0));
  const auto owner = crypto::KeyPair::from_seed(79);
  net.add_participant(owner.verifying_key());
  const auto r = decentral_ov(net, owner, f.marked.model, f.key, f.marked.verifier);
  EXPECT_FALSE(r.verdict.has_value());
  EXPECT_EQ(r.minted, 0u);
}

TEST(Decentral, RequestSignatureAndEavesdrop) {
  const auto& f = fx();
  const auto owner = crypto::KeyPair::from_seed(80);
  auto req = make_ov_request(owner, f.marked.model, f.key, f.marked.verifier);
  EXPECT_TRUE(check_request(req));
  const auto ev = eavesdrop_capture(req);
  EXPECT_EQ(ev.key, f.key);
  EXPECT_EQ(ev.verifier, f.marked.verifier);
  req.model[10] ^= 1;
  EXPECT_FALSE(check_request(req));
}

TEST(Dispute, EarlierOwnRecordWins) {
  const auto& f = fx();
  Network net(net_cfg(3, 0));
  const auto owner = crypto::KeyPair::from_seed(81), pirate = crypto::KeyPair::from_seed(82);
  net.add_participant(owner.verifying_key());
  net.add_participant(pirate.verifying_key());
  decentral_commit(net.community(), owner, f.key, f.marked.verifier, f.b.arch);
  const auto ow = adv::overwrite(f.marked.model, SchemeId::ParamEmbed, f.b.train, f.b.embed_cfg(4), 556, f.b.spec.scheme);
  decentral_commit(net.community(), pirate, ow.key, ow.verifier, f.b.arch);

  const std::vector<Claim> claims{{pirate.verifying_key(), ow.key, ow.verifier},
                                  {owner.verifying_key(), f.key, f.marked.verifier}};
  const auto r = resolve_dispute(net.community().log(), ow.model, claims);
  EXPECT_EQ(r.winner, std::optional<std::size_t>(1));
  EXPECT_TRUE(r.claims[0].verifies);
  EXPECT_EQ(r.claims[0].timestamp, std::optional<std::uint64_t>(1));

  // The pirate presenting the owner's own key still loses: the record is not theirs.
  const std::vector<Claim> stolen{{pirate.verifying_key(), f.key, f.marked.verifier}};
  const auto s = resolve_dispute(net.community().log(), ow.model, stolen);
  EXPECT_FALSE(s.winner.has_value());
  EXPECT_FALSE(s.claims[0].own_record);
}

TEST(Scenario, SpoilFigureReplays) {
  std::ifstream in(std::string(OVNET_SOURCE_DIR) + "/configs/spoil_fig1.json");
  const auto script = nlohmann::json::parse(in);
  const auto a = run_scenario(script);
  EXPECT_TRUE(a.ok()) << (a.failures.empty() ? "" : a.failures.front());
  EXPECT_TRUE(a.log.audit().ok);
  const auto b = run_scenario(script);
  EXPECT_EQ(a.transcript.dump(), b.transcript.dump());
  EXPECT_EQ(a.log.export_binary(), b.log.export_binary());
}

TEST(Scenario, ValidationListsEveryViolation) {
  const auto bad = nlohmann::json::parse(R"({"seed": 1, "actors": ["a"],
    "steps": [{"op": "embed", "actor": "a"}, {"op": "teleport"}]})");
  const auto v = validate_scenario(bad);
  EXPECT_GE(v.size(), 2u);
  EXPECT_THROW(run_scenario(bad), InvalidParameter);
}

TEST(Scenario, ExpectMismatchIsCollected) {
  const auto s = nlohmann::json::parse(R"({"seed": 3, "scheme": "param", "actors": ["o"],
    "steps": [{"op": "embed", "actor": "o", "key": "k", "model": "clean", "out": "m"},
              {"op": "verify", "key": "k", "model": "clean", "expect": 1}]})");
  const auto r = run_scenario(s);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.failures.size(), 1u);
}
