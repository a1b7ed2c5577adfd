#include "ovnet/ledger/ledger.hpp"

#include <nlohmann/json.hpp>

namespace ovnet::ledger {

namespace {

constexpr char kLogMagic[4] = {'O', 'V', 'N', 'L'};
constexpr std::uint32_t kLogVersion = 1;

ByteReader open_payload(ByteView payload, RecordTag want) {
  ByteReader r(payload);
  if (r.u8() != static_cast<std::uint8_t>(want)) throw FormatError("unexpected record tag");
  return r;
}

Digest read_digest(ByteReader& r) { return Digest::from_bytes(r.raw(32)); }

}  // namespace

Bytes LedgerEntry::signed_message() const {
  ByteWriter w;
  w.u64(seq);
  w.raw(payload);
  return std::move(w).take();
}

Bytes OwnershipRecord::serialize() const {
  ByteWriter w;
  w.u64(time);
  w.raw(h_key.view());
  w.raw(h_verify.view());
  w.raw(h_info.view());
  return std::move(w).take();
}

OwnershipRecord OwnershipRecord::deserialize(ByteView b) {
  if (b.size() != kSize) throw FormatError("ownership record must be 104 bytes");
  ByteReader r(b);
  OwnershipRecord o;
  o.time = r.u64();
  o.h_key = read_digest(r);
  o.h_verify = read_digest(r);
  o.h_info = read_digest(r);
  return o;
}

Bytes encode(const OwnershipRecord& rec) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(RecordTag::Ownership));
  w.raw(rec.serialize());
  return std::move(w).take();
}

Bytes encode(const OvRequestRecord& rec) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(RecordTag::OvRequest));
  w.raw(rec.request.view());
  w.raw(rec.h_verify.view());
  return std::move(w).take();
}

Bytes encode(const VoteRecord& rec) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(RecordTag::Vote));
  w.raw(rec.request.view());
  w.u8(rec.bit ? 1 : 0);
  return std::move(w).take();
}

Bytes encode(const AnchorRecord& rec) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(RecordTag::Anchor));
  w.raw(rec.root.view());
  w.u32(rec.leaves);
  return std::move(w).take();
}

RecordTag payload_tag(ByteView payload) {
  if (payload.empty()) throw FormatError("empty payload");
  const auto t = payload[0];
  if (t < 0x01 || t > 0x04) throw FormatError("unknown record tag");
  return static_cast<RecordTag>(t);
}

OwnershipRecord decode_ownership(ByteView payload) {
  open_payload(payload, RecordTag::Ownership);
  return OwnershipRecord::deserialize(payload.subspan(1));
}

OvRequestRecord decode_ov_request(ByteView payload) {
  auto r = open_payload(payload, RecordTag::OvRequest);
  OvRequestRecord o;
  o.request = read_digest(r);
  o.h_verify = read_digest(r);
  r.expect_done();
  return o;
}

VoteRecord decode_vote(ByteView payload) {
  auto r = open_payload(payload, RecordTag::Vote);
  VoteRecord v;
  v.request = read_digest(r);
  const auto b = r.u8();
  if (b > 1) throw FormatError("vote bit must be 0 or 1");
  v.bit = b == 1;
  r.expect_done();
  return v;
}

AnchorRecord decode_anchor(ByteView payload) {
  auto r = open_payload(payload, RecordTag::Anchor);
  AnchorRecord a;
  a.root = read_digest(r);
  a.leaves = r.u32();
  r.expect_done();
  return a;
}

Ledger Ledger::from_entries(std::vector<LedgerEntry> entries) {
  Ledger l;
  l.entries_ = std::move(entries);
  return l;
}

const LedgerEntry& Ledger::at(std::uint64_t seq) const {
  if (seq >= entries_.size()) throw RangeError("no ledger entry at seq " + std::to_string(seq));
  return entries_[seq];
}

const LedgerEntry& Ledger::append(const KeyPair& author, ByteView payload) {
  LedgerEntry e;
  e.seq = next_seq();
  e.author = author.verifying_key();
  e.payload.assign(payload.begin(), payload.end());
  e.sig = crypto::sign(author, e.signed_message());
  return accept(std::move(e));
}

const LedgerEntry& Ledger::accept(LedgerEntry e) {
  if (e.seq != next_seq())
    throw FormatError("entry seq " + std::to_string(e.seq) + " is not the next seq " + std::to_string(next_seq()));
  if (!crypto::verify_sig(e.author, e.signed_message(), e.sig)) throw SignatureError("entry signature does not verify");
  if (payload_tag(e.payload) == RecordTag::Ownership && decode_ownership(e.payload).time != e.seq)
    throw FormatError("ownership record time must equal its seq");
  entries_.push_back(std::move(e));
  return entries_.back();
}

std::optional<std::uint64_t> Ledger::lookup_timestamp(const Digest& h_verify) const {
  for (const auto& e : entries_) {
    if (e.payload.empty() || e.payload[0] != static_cast<std::uint8_t>(RecordTag::Ownership)) continue;
    if (decode_ownership(e.payload).h_verify == h_verify) return e.seq;
  }
  return std::nullopt;
}

std::vector<std::uint64_t> Ledger::lookup_all(const Digest& h_verify) const {
  std::vector<std::uint64_t> out;
  for (const auto& e : entries_) {
    if (e.payload.empty() || e.payload[0] != static_cast<std::uint8_t>(RecordTag::Ownership)) continue;
    if (decode_ownership(e.payload).h_verify == h_verify) out.push_back(e.seq);
  }
  return out;
}

AuditResult Ledger::audit() const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    auto fail = [&](std::string why) { return AuditResult{false, i, std::move(why)}; };
    if (e.seq != i) return fail("seq gap: expected " + std::to_string(i) + ", found " + std::to_string(e.seq));
    if (!crypto::verify_sig(e.author, e.signed_message(), e.sig)) return fail("bad signature");
    try {
      if (payload_tag(e.payload) == RecordTag::Ownership && decode_ownership(e.payload).time != e.seq)
        return fail("ownership time differs from seq");
    } catch (const FormatError& err) {
      return fail(err.what());
    }
  }
  return {};
}

Bytes Ledger::export_binary() const {
  ByteWriter w;
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kLogMagic), 4));
  w.u32(kLogVersion);
  w.u64(entries_.size());
  for (const auto& e : entries_) {
    w.u64(e.seq);
    w.raw(e.author.view());
    w.blob(e.payload);
    w.raw(e.sig.view());
  }
  return std::move(w).take();
}

Ledger Ledger::import_binary(ByteView b) {
  ByteReader r(b);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kLogMagic)) throw FormatError("not a ledger log");
  if (r.u32() != kLogVersion) throw FormatError("unsupported ledger log version");
  const auto n = r.u64();
  if (n > r.remaining() / (8 + 32 + 4 + 64)) throw FormatError("truncated ledger log");
  std::vector<LedgerEntry> entries;
  entries.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    LedgerEntry e;
    e.seq = r.u64();
    e.author = VerifyingKey::from_bytes(r.raw(32));
    e.payload = r.blob();
    e.sig = Signature::from_bytes(r.raw(64));
    entries.push_back(std::move(e));
  }
  r.expect_done();
  return from_entries(std::move(entries));
}

std::string Ledger::export_jsonl() const {
  std::string out;
  for (const auto& e : entries_) {
    nlohmann::ordered_json j;
    j["seq"] = e.seq;
    j["author"] = e.author.hex();
    j["payload"] = to_hex(e.payload);
    j["sig"] = to_hex(e.sig.view());
    out += j.dump();
    out += '\n';
  }
  return out;
}

Ledger Ledger::import_jsonl(std::string_view text) {
  std::vector<LedgerEntry> entries;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LedgerEntry e;
      e.seq = j.at("seq").get<std::uint64_t>();
      e.author = VerifyingKey::from_bytes(from_hex(j.at("author").get<std::string>()));
      e.payload = from_hex(j.at("payload").get<std::string>());
      e.sig = Signature::from_bytes(from_hex(j.at("sig").get<std::string>()));
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& err) {
      throw FormatError(std::string("bad ledger line: ") + err.what());
    }
  }
  return from_entries(std::move(entries));
}

std::uint64_t Ledger::byte_size() const {
  std::uint64_t n = 0;
  for (const auto& e : entries_) n += 8 + 32 + e.payload.size() + 64;
  return n;
}

VoteTally::VoteTally(Digest request, std::size_t electorate, double quorum)
    : request_(request), electorate_(electorate), quorum_(quorum) {
  if (!(quorum >= 0.0 && quorum < 1.0)) throw InvalidParameter("quorum must be in [0,1)");
}

void VoteTally::cast(const VerifyingKey& agent, bool bit) {
  if (!votes_.emplace(agent, bit).second) throw InvalidParameter("agent already voted on this request");
}

std::size_t VoteTally::yes() const {
  std::size_t n = 0;
  for (const auto& [id, b] : votes_) n += b ? 1 : 0;
  return n;
}

std::size_t VoteTally::no() const { return votes_.size() - yes(); }

bool VoteTally::quorate() const {
  return electorate_ > 0 && static_cast<double>(votes_.size()) > quorum_ * static_cast<double>(electorate_);
}

std::optional<bool> VoteTally::outcome() const {
  if (!quorate() || yes() == no()) return std::nullopt;
  return yes() > no();
}

void Community::register_participant(const VerifyingKey& id, bool voter, bool honest) {
  if (agents_.contains(id)) throw RegistrationError("participant already registered");
  agents_.emplace(id, Agent{id, cfg_.endowment, honest, voter});
}

const Agent& Community::agent(const VerifyingKey& id) const {
  auto it = agents_.find(id);
  if (it == agents_.end()) throw RegistrationError("unknown participant " + id.hex().substr(0, 16));
  return it->second;
}

std::vector<VerifyingKey> Community::voters() const {
  std::vector<VerifyingKey> out;
  for (const auto& [id, a] : agents_)
    if (a.voter) out.push_back(id);
  return out;
}

const LedgerEntry& Community::append(const KeyPair& author, ByteView payload) {
  agent(author.verifying_key());
  return log_.append(author, payload);
}

const LedgerEntry& Community::accept(LedgerEntry e) {
  agent(e.author);
  return log_.accept(std::move(e));
}

VoteTally Community::open_tally(const Digest& request) const {
  return VoteTally(request, voters().size(), cfg_.quorum);
}

void Community::charge_fee(const VerifyingKey& initiator) {
  auto it = agents_.find(initiator);
  if (it == agents_.end()) throw RegistrationError("initiator is not a participant");
  if (it->second.credits < cfg_.ov_fee) throw CreditError("initiator cannot pay the verification fee");
  it->second.credits -= cfg_.ov_fee;
  burned_ += cfg_.ov_fee;
}

std::uint64_t Community::settle(const VoteTally& tally) {
  const auto out = tally.outcome();
  if (!out) return 0;
  std::uint64_t n = 0;
  for (const auto& [id, bit] : tally.votes()) {
    if (bit != *out) continue;
    auto it = agents_.find(id);
    if (it == agents_.end()) throw RegistrationError("vote from unknown agent");
    ++it->second.credits;
    ++n;
  }
  minted_ += n;
  return n;
}

std::uint64_t Community::total_credits() const {
  std::uint64_t n = 0;
  for (const auto& [id, a] : agents_) n += a.credits;
  return n;
}

}  // namespace ovnet::ledger
