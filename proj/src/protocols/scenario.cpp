#include "ovnet/protocols/scenario.hpp"

#include <map>
#include <set>

#include "ovnet/adversary/attacks.hpp"
#include "ovnet/bench.hpp"
#include "ovnet/protocols/decentral.hpp"
#include "ovnet/rng.hpp"

namespace ovnet::protocols {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const std::map<std::string, std::vector<std::string>> kStepFields = {
    {"embed", {"actor", "key", "model", "out"}},
    {"overwrite", {"actor", "key", "model", "out"}},
    {"commit", {"actor", "key"}},
    {"ov", {"actor", "key", "model"}},
    {"eavesdrop", {"actor", "request", "as"}},
    {"spoil", {"actor", "key", "model", "out"}},
    {"verify", {"key", "model"}},
    {"dispute", {"model", "claims"}},
    {"audit", {}},
};

struct HeldKey {
  std::string holder;
  wm::WatermarkKey key;
  std::optional<wm::Verifier> verifier;
};

std::string short_hex(const crypto::VerifyingKey& k) { return k.hex().substr(0, 16); }

json verdict_json(const std::optional<bool>& v) {
  if (!v) return "inconclusive";
  return *v ? 1 : 0;
}

class Interpreter {
 public:
  Interpreter(const json& script, std::uint64_t seed)
      : seed_(seed),
        scheme_(wm::scheme_from_string(script.value("scheme", "param"))),
        bench_(bench::make_benchmark(seed)),
        net_(network_config(script, seed)) {
    models_.emplace("clean", bench_.clean);
    std::uint64_t i = 0;
    for (const auto& a : script.at("actors")) {
      const auto name = a.get<std::string>();
      auto kp = crypto::KeyPair::from_seed(derive_seed(seed, {0xac7, i++}));
      net_.add_participant(kp.verifying_key());
      actors_.emplace(name, kp);
      order_.push_back(name);
    }
    out_["name"] = script.value("name", "");
    out_["seed"] = seed;
    out_["scheme"] = wm::to_string(scheme_);
    out_["clean_accuracy"] = bench_.clean_accuracy;
    out_["steps"] = ojson::array();
  }

  void run(const json& steps) {
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const auto& s = steps[i];
      ojson rec;
      rec["step"] = i;
      rec["op"] = s.at("op");
      step(i, s, rec);
      out_["steps"].push_back(rec);
    }
  }

  ScenarioResult finish() {
    const auto& log = net_.community().log();
    const auto audit = log.audit();
    ojson l;
    l["entries"] = log.size();
    l["bytes"] = log.byte_size();
    l["audit"] = audit.ok;
    l["digest"] = crypto::hash(log.export_binary()).hex();
    out_["ledger"] = l;
    ojson credits = ojson::object();
    for (const auto& name : order_) credits[name] = net_.community().agent(actors_.at(name).verifying_key()).credits;
    for (const auto& a : net_.agents())
      credits["agent:" + short_hex(a.kp.verifying_key())] = net_.community().agent(a.kp.verifying_key()).credits;
    out_["credits"] = credits;
    out_["minted"] = net_.community().minted();
    out_["burned"] = net_.community().burned();
    out_["ok"] = failures_.empty();
    out_["failures"] = failures_;
    return {out_, failures_, log};
  }

 private:
  static NetworkConfig network_config(const json& script, std::uint64_t seed) {
    NetworkConfig c;
    c.seed = derive_seed(seed, {0x9e7});
    if (script.contains("network")) {
      const auto& n = script["network"];
      c.agents = n.value("agents", c.agents);
      c.malicious = n.value("malicious", c.malicious);
      c.participation = n.value("participation", c.participation);
      c.community.quorum = n.value("quorum", c.community.quorum);
      c.community.ov_fee = n.value("fee", c.community.ov_fee);
      c.community.endowment = n.value("endowment", c.community.endowment);
    }
    return c;
  }

  const crypto::KeyPair& actor(const json& s) {
    const auto name = s.at("actor").get<std::string>();
    auto it = actors_.find(name);
    if (it == actors_.end()) throw InvalidParameter("unknown actor '" + name + "'");
    return it->second;
  }

  const nn::Model& model(const json& s) {
    const auto name = s.at("model").get<std::string>();
    auto it = models_.find(name);
    if (it == models_.end()) throw InvalidParameter("unknown model '" + name + "'");
    return it->second;
  }

  HeldKey& held(const std::string& name) {
    auto it = keys_.find(name);
    if (it == keys_.end()) throw InvalidParameter("unknown key '" + name + "'");
    return it->second;
  }

  // Generates the key on first use; ParamEmbed keys avoid every known position.
  HeldKey& key_for(const std::string& name, const std::string& holder) {
    if (auto it = keys_.find(name); it != keys_.end()) return it->second;
    std::vector<wm::WatermarkKey> avoid;
    for (const auto& [n, k] : keys_) avoid.push_back(k.key);
    auto k = wm::gen(scheme_, bench_.spec.scheme.security_bits, bench_.arch, derive_seed(seed_, {0x6b, keys_.size()}),
                     bench_.spec.scheme, avoid);
    return keys_.emplace(name, HeldKey{holder, std::move(k), std::nullopt}).first->second;
  }

  const wm::Verifier& verifier_of(const HeldKey& k, const std::string& name) {
    if (!k.verifier) throw InvalidParameter("key '" + name + "' has no verifier (never embedded)");
    return *k.verifier;
  }

  void expect(std::size_t i, const json& s, const json& got, ojson& rec) {
    if (!s.contains("expect")) return;
    const bool match = s["expect"] == got;
    rec["expect"] = s["expect"];
    rec["matched"] = match;
    if (!match)
      failures_.push_back("step " + std::to_string(i) + " (" + s["op"].get<std::string>() + "): expected " +
                          s["expect"].dump() + ", got " + got.dump());
  }

  void step(std::size_t i, const json& s, ojson& rec) {
    const auto op = s.at("op").get<std::string>();
    if (op == "embed" || op == "overwrite") {
      const auto& kp = actor(s);
      (void)kp;
      auto& k = key_for(s.at("key"), s.at("actor"));
      auto r = wm::embed(model(s), k.key, bench_.train, bench_.embed_cfg(0x5c00 + i), bench_.spec.scheme);
      k.verifier = r.verifier;
      rec["key"] = s["key"];
      rec["key_digest"] = k.key.digest().hex();
      rec["accuracy"] = nn::accuracy(r.model, bench_.test);
      models_.insert_or_assign(s.at("out").get<std::string>(), std::move(r.model));
    } else if (op == "commit") {
      const auto& kp = actor(s);
      auto& k = held(s.at("key"));
      const auto e = decentral_commit(net_.community(), kp, k.key, verifier_of(k, s["key"]), bench_.arch);
      rec["key"] = s["key"];
      rec["seq"] = e.seq;
      rec["record"] = to_hex(ByteView(e.payload).subspan(1));
      expect(i, s, e.seq, rec);
    } else if (op == "ov") {
      const auto& kp = actor(s);
      auto& k = held(s.at("key"));
      const auto r = decentral_ov(net_, kp, model(s), k.key, verifier_of(k, s["key"]));
      rec["key"] = s["key"];
      rec["model"] = s["model"];
      rec["verdict"] = verdict_json(r.verdict);
      rec["yes"] = r.yes;
      rec["no"] = r.no;
      rec["electorate"] = r.electorate;
      ojson votes = ojson::object();
      for (const auto& [id, b] : r.votes) votes[short_hex(id)] = b ? 1 : 0;
      rec["votes"] = votes;
      rec["timestamp"] = r.timestamp ? json(*r.timestamp) : json(nullptr);
      rec["anchored"] = r.anchored;
      rec["traffic_bytes"] = r.traffic_bytes;
      rec["request"] = r.request.hex();
      expect(i, s, verdict_json(r.verdict), rec);
    } else if (op == "eavesdrop") {
      actor(s);
      const auto& bc = net_.broadcasts();
      long idx = s.at("request").get<long>();
      if (idx < 0) idx += static_cast<long>(bc.size());
      if (idx < 0 || idx >= static_cast<long>(bc.size())) throw RangeError("no broadcast at index " + s["request"].dump());
      auto ev = eavesdrop_capture(bc[static_cast<std::size_t>(idx)]);
      rec["captured"] = ev.key.digest().hex();
      keys_.insert_or_assign(s.at("as").get<std::string>(), HeldKey{s.at("actor"), std::move(ev.key), ev.verifier});
    } else if (op == "spoil") {
      actor(s);
      auto& k = held(s.at("key"));
      adv::AttackBudget b;
      b.tune_epochs = 30;
      b.delta = bench_.clean_error();
      b.seed = derive_seed(seed_, {0x5b, i});
      const auto& before = model(s);
      auto sp = adv::spoil(before, k.key, verifier_of(k, s["key"]), bench_.train, b, bench_.spec.scheme);
      rec["verify_after"] = wm::verify(sp, k.key, *k.verifier) ? 1 : 0;
      rec["accuracy_decline"] = nn::accuracy(before, bench_.test) - nn::accuracy(sp, bench_.test);
      models_.insert_or_assign(s.at("out").get<std::string>(), std::move(sp));
    } else if (op == "verify") {
      auto& k = held(s.at("key"));
      const int v = wm::verify(model(s), k.key, verifier_of(k, s["key"])) ? 1 : 0;
      rec["key"] = s["key"];
      rec["model"] = s["model"];
      rec["verdict"] = v;
      expect(i, s, v, rec);
    } else if (op == "dispute") {
      std::vector<Claim> claims;
      std::vector<std::string> who;
      for (const auto& c : s.at("claims")) {
        const auto& kp = actor(c);
        auto& k = held(c.at("key"));
        claims.push_back({kp.verifying_key(), k.key, verifier_of(k, c["key"])});
        who.push_back(c.at("actor"));
      }
      const auto ruling = resolve_dispute(net_.community().log(), model(s), claims);
      ojson cl = ojson::array();
      for (std::size_t c = 0; c < claims.size(); ++c) {
        const auto& st = ruling.claims[c];
        cl.push_back({{"actor", who[c]},
                      {"verifies", st.verifies},
                      {"timestamp", st.timestamp ? json(*st.timestamp) : json(nullptr)},
                      {"own_record", st.own_record}});
      }
      rec["claims"] = cl;
      const json winner = ruling.winner ? json(who[*ruling.winner]) : json(nullptr);
      rec["winner"] = winner;
      expect(i, s, winner, rec);
    } else if (op == "audit") {
      const auto a = net_.community().audit();
      rec["audit"] = a.ok;
      if (!a.ok) rec["reason"] = a.reason;
      expect(i, s, a.ok, rec);
    } else {
      throw InvalidParameter("unknown scenario op '" + op + "'");
    }
  }

  std::uint64_t seed_;
  wm::SchemeId scheme_;
  bench::Benchmark bench_;
  Network net_;
  std::map<std::string, crypto::KeyPair> actors_;
  std::vector<std::string> order_;
  std::map<std::string, HeldKey> keys_;
  std::map<std::string, nn::Model> models_;
  std::vector<std::string> failures_;
  ojson out_;
};

}  // namespace

std::vector<std::string> validate_scenario(const nlohmann::json& script) {
  std::vector<std::string> errs;
  if (!script.is_object()) return {"scenario must be a JSON object"};
  if (script.contains("seed") && !script["seed"].is_number_unsigned()) errs.push_back("seed: must be an unsigned integer");
  if (script.contains("scheme")) {
    if (!script["scheme"].is_string()) {
      errs.push_back("scheme: must be a string");
    } else {
      try {
        wm::scheme_from_string(script["scheme"].get<std::string>());
      } catch (const InvalidParameter&) {
        errs.push_back("scheme: unknown scheme '" + script["scheme"].get<std::string>() + "'");
      }
    }
  }
  std::set<std::string> actors;
  if (!script.contains("actors") || !script["actors"].is_array()) {
    errs.push_back("actors: required array of names");
  } else {
    for (const auto& a : script["actors"]) {
      if (!a.is_string()) errs.push_back("actors: every entry must be a string");
      else if (!actors.insert(a.get<std::string>()).second) errs.push_back("actors: duplicate '" + a.get<std::string>() + "'");
    }
  }
  if (script.contains("network")) {
    const auto& n = script["network"];
    if (!n.is_object()) {
      errs.push_back("network: must be an object");
    } else {
      for (const char* f : {"agents", "malicious", "fee", "endowment"})
        if (n.contains(f) && !n[f].is_number_unsigned()) errs.push_back(std::string("network.") + f + ": must be an unsigned integer");
      for (const char* f : {"participation", "quorum"})
        if (n.contains(f) && !n[f].is_number()) errs.push_back(std::string("network.") + f + ": must be a number");
      if (n.value("malicious", 0) > n.value("agents", 5)) errs.push_back("network.malicious: exceeds agents");
    }
  }
  if (!script.contains("steps") || !script["steps"].is_array()) {
    errs.push_back("steps: required array");
    return errs;
  }
  for (std::size_t i = 0; i < script["steps"].size(); ++i) {
    const auto& s = script["steps"][i];
    const auto where = "steps[" + std::to_string(i) + "]";
    if (!s.is_object() || !s.contains("op") || !s["op"].is_string()) {
      errs.push_back(where + ": missing op");
      continue;
    }
    const auto op = s["op"].get<std::string>();
    auto it = kStepFields.find(op);
    if (it == kStepFields.end()) {
      errs.push_back(where + ": unknown op '" + op + "'");
      continue;
    }
    for (const auto& f : it->second)
      if (!s.contains(f)) errs.push_back(where + "." + f + ": required for " + op);
    if (s.contains("actor") && s["actor"].is_string() && !actors.contains(s["actor"].get<std::string>()))
      errs.push_back(where + ".actor: unknown actor '" + s["actor"].get<std::string>() + "'");
    if (op == "eavesdrop" && s.contains("request") && !s["request"].is_number_integer())
      errs.push_back(where + ".request: must be an integer");
    if (op == "dispute" && s.contains("claims")) {
      if (!s["claims"].is_array()) errs.push_back(where + ".claims: must be an array");
      else
        for (const auto& c : s["claims"])
          if (!c.contains("actor") || !c.contains("key")) errs.push_back(where + ".claims: each claim needs actor and key");
    }
  }
  return errs;
}

ScenarioResult run_scenario(const nlohmann::json& script, std::optional<std::uint64_t> seed_override) {
  const auto errs = validate_scenario(script);
  if (!errs.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw InvalidParameter(msg);
  }
  const std::uint64_t seed = seed_override.value_or(script.value("seed", std::uint64_t{0}));
  Interpreter in(script, seed);
  in.run(script["steps"]);
  return in.finish();
}

}  // namespace ovnet::protocols
