#include <gtest/gtest.h>

#include "ovnet/ledger/ledger.hpp"

using namespace ovnet;
using namespace ovnet::ledger;

namespace {

OwnershipRecord golden_record() {
  return {7, crypto::hash(std::string_view("key")), crypto::hash(std::string_view("verify")),
          crypto::hash(std::string_view("info"))};
}

// Pinned from an independent computation: u64 LE time followed by three SHA-256 digests.
constexpr const char* kGoldenRecord =
    "0700000000000000"
    "2c70e12b7a0646f92279f427c7b38e7334d8e5389cff167a1dc30e73f826b683"
    "a12dd3a7fd3203a452eb34d91a9be20569d5e337a3384347068895c07f3e0c5a"
    "06271baf49532c879aa3c58b48671884bcc858f09197412d682750496c33e1e1";

// 20 entries of all four record kinds from three authors.
Ledger twenty(const std::vector<KeyPair>& kps) {
  Ledger l;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto& kp = kps[i % kps.size()];
    const auto d = crypto::hash("entry" + std::to_string(i));
    switch (i % 4) {
      case 0: l.append(kp, encode(OwnershipRecord{l.next_seq(), d, crypto::hash(d.view()), d})); break;
      case 1: l.append(kp, encode(OvRequestRecord{d, d})); break;
      case 2: l.append(kp, encode(VoteRecord{d, i % 3 == 0})); break;
      default: l.append(kp, encode(AnchorRecord{d, static_cast<std::uint32_t>(i)})); break;
    }
  }
  return l;
}

std::vector<KeyPair> authors() { return {KeyPair::from_seed(1), KeyPair::from_seed(2), KeyPair::from_seed(3)}; }

}  // namespace

TEST(Record, GoldenLayout) {
  const auto bytes = golden_record().serialize();
  ASSERT_EQ(bytes.size(), OwnershipRecord::kSize);
  EXPECT_EQ(to_hex(bytes), kGoldenRecord);
  const auto payload = encode(golden_record());
  EXPECT_EQ(payload.front(), 0x01);
  EXPECT_EQ(decode_ownership(payload), golden_record());
  LedgerEntry e{7, {}, payload, {}};
  EXPECT_EQ(to_hex(e.signed_message()), std::string("0700000000000000") + "01" + kGoldenRecord);
}

TEST(Record, AllKindsRoundTrip) {
  const auto d = crypto::hash(std::string_view("d"));
  EXPECT_EQ(decode_ov_request(encode(OvRequestRecord{d, d})), (OvRequestRecord{d, d}));
  EXPECT_EQ(decode_vote(encode(VoteRecord{d, true})), (VoteRecord{d, true}));
  EXPECT_EQ(decode_anchor(encode(AnchorRecord{d, 9})), (AnchorRecord{d, 9}));
  EXPECT_THROW(decode_vote(encode(AnchorRecord{d, 9})), FormatError);
  EXPECT_THROW(payload_tag(Bytes{0x09}), FormatError);
  EXPECT_THROW(payload_tag(Bytes{}), FormatError);
}

TEST(Ledger, TwentyEntriesAudit) {
  const auto l = twenty(authors());
  EXPECT_EQ(l.size(), 20u);
  EXPECT_TRUE(l.audit().ok);
}

// Every byte of every entry's payload, signature and author, flipped once.
TEST(Ledger, MutationOracle) {
  const auto kps = authors();
  const auto base = twenty(kps);
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto& e = base.entries()[i];
    auto check = [&](LedgerEntry m, const char* what, std::size_t b) {
      auto entries = base.entries();
      entries[i] = std::move(m);
      const auto r = Ledger::from_entries(entries).audit();
      EXPECT_FALSE(r.ok) << what << " entry " << i << " byte " << b;
      EXPECT_EQ(r.bad_entry, i);
    };
    for (std::size_t b = 0; b < e.payload.size(); ++b) {
      auto m = e;
      m.payload[b] ^= 0x01;
      check(m, "payload", b);
    }
    for (std::size_t b = 0; b < e.sig.bytes.size(); ++b) {
      auto m = e;
      m.sig.bytes[b] ^= 0x40;
      check(m, "signature", b);
    }
    for (std::size_t b = 0; b < e.author.bytes.size(); ++b) {
      auto m = e;
      m.author.bytes[b] ^= 0x02;
      check(m, "author", b);
    }
  }
}

TEST(Ledger, GapReorderAndTruncation) {
  const auto base = twenty(authors());
  auto entries = base.entries();
  entries.erase(entries.begin() + 5);
  auto r = Ledger::from_entries(entries).audit();
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.bad_entry, 5u);

  entries = base.entries();
  std::swap(entries[3], entries[4]);
  EXPECT_EQ(Ledger::from_entries(entries).audit().bad_entry, 3u);

  entries = base.entries();
  entries.resize(12);
  EXPECT_TRUE(Ledger::from_entries(entries).audit().ok);  // a prefix is a valid log
}

TEST(Ledger, AcceptRejectsBadEntriesAndLeavesLogUnchanged) {
  const auto kps = authors();
  Ledger l;
  l.append(kps[0], encode(VoteRecord{}));
  LedgerEntry e{1, kps[1].verifying_key(), encode(VoteRecord{}), {}};
  e.sig = crypto::sign(kps[1], e.signed_message());
  auto bad = e;
  bad.sig.bytes[0] ^= 1;
  EXPECT_THROW(l.accept(bad), SignatureError);
  bad = e;
  bad.seq = 5;
  EXPECT_THROW(l.accept(bad), FormatError);
  EXPECT_EQ(l.size(), 1u);
  l.accept(e);
  EXPECT_EQ(l.size(), 2u);

  // Ownership time must equal the seq it lands at.
  const auto own = encode(OwnershipRecord{9, {}, {}, {}});
  EXPECT_THROW(l.append(kps[0], own), FormatError);
}

TEST(Ledger, EarliestOwnershipWins) {
  const auto kps = authors();
  Ledger l;
  const auto hv = crypto::hash(std::string_view("verify"));
  l.append(kps[0], encode(VoteRecord{}));
  l.append(kps[1], encode(OwnershipRecord{1, {}, hv, {}}));
  l.append(kps[2], encode(OwnershipRecord{2, {}, hv, {}}));
  EXPECT_EQ(l.lookup_timestamp(hv), 1u);
  EXPECT_EQ(l.lookup_all(hv), (std::vector<std::uint64_t>{1, 2}));
  EXPECT_FALSE(l.lookup_timestamp(crypto::hash(std::string_view("other"))).has_value());
}

TEST(Ledger, ExportImportRoundTrip) {
  const auto l = twenty(authors());
  const auto bin = l.export_binary();
  EXPECT_EQ(Ledger::import_binary(bin).entries(), l.entries());
  EXPECT_EQ(l.byte_size() + 16 + 4 * l.size(), bin.size());
  EXPECT_EQ(Ledger::import_jsonl(l.export_jsonl()).entries(), l.entries());
  Bytes cut(bin.begin(), bin.end() - 10);
  EXPECT_THROW(Ledger::import_binary(cut), FormatError);
  Bytes wrong = bin;
  wrong[0] ^= 0xff;
  EXPECT_THROW(Ledger::import_binary(wrong), FormatError);
  EXPECT_THROW(Ledger::import_jsonl("{not json"), FormatError);
}

TEST(Tally, QuorumTiesAndDoubleVotes) {
  const auto r = crypto::hash(std::string_view("req"));
  std::vector<KeyPair> v;
  for (std::uint64_t i = 0; i < 5; ++i) v.push_back(KeyPair::from_seed(50 + i));

  VoteTally t(r, 5, 0.5);
  t.cast(v[0].verifying_key(), true);
  t.cast(v[1].verifying_key(), true);
  EXPECT_FALSE(t.quorate());  // 2 of 5 does not exceed half
  EXPECT_FALSE(t.outcome().has_value());
  t.cast(v[2].verifying_key(), false);
  EXPECT_TRUE(t.quorate());
  EXPECT_EQ(t.outcome(), std::optional<bool>(true));
  EXPECT_THROW(t.cast(v[0].verifying_key(), false), InvalidParameter);

  VoteTally tie(r, 4, 0.5);
  for (int i = 0; i < 4; ++i) tie.cast(v[static_cast<std::size_t>(i)].verifying_key(), i % 2 == 0);
  EXPECT_TRUE(tie.quorate());
  EXPECT_FALSE(tie.outcome().has_value());
}

TEST(Community, MembershipFeesAndConservation) {
  Community c;
  const auto owner = KeyPair::from_seed(1), outsider = KeyPair::from_seed(2);
  c.register_participant(owner.verifying_key());
  std::vector<KeyPair> voters;
  for (std::uint64_t i = 0; i < 3; ++i) {
    voters.push_back(KeyPair::from_seed(10 + i));
    c.register_participant(voters.back().verifying_key(), true);
  }
  EXPECT_THROW(c.append(outsider, encode(VoteRecord{})), RegistrationError);
  EXPECT_EQ(c.voters().size(), 3u);

  const auto start = c.total_credits();
  EXPECT_EQ(start, 4 * c.config().endowment);
  c.charge_fee(owner.verifying_key());
  auto t = c.open_tally(crypto::hash(std::string_view("r")));
  t.cast(voters[0].verifying_key(), true);
  t.cast(voters[1].verifying_key(), true);
  t.cast(voters[2].verifying_key(), false);
  EXPECT_EQ(c.settle(t), 2u);
  EXPECT_EQ(c.total_credits(), start + c.minted() - c.burned());
  EXPECT_EQ(c.agent(voters[2].verifying_key()).credits, c.config().endowment);

  for (std::uint64_t i = 0; i < c.config().endowment - 1; ++i) c.charge_fee(owner.verifying_key());
  EXPECT_THROW(c.charge_fee(owner.verifying_key()), CreditError);
  EXPECT_THROW(c.charge_fee(outsider.verifying_key()), RegistrationError);
}
