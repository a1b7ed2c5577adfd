#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "ovnet/adversary/games.hpp"
#include "ovnet/crypto/merkle.hpp"
#include "ovnet/fedwm/merkle_sign.hpp"
#include "ovnet/metrics/metrics.hpp"
#include "ovnet/protocols/scenario.hpp"
#include "ovnet/rng.hpp"

namespace ovnet::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string to_string(Command c) {
  switch (c) {
    case Command::scenario: return "scenario";
    case Command::game: return "game";
    case Command::fl: return "fl";
    case Command::metrics: return "metrics";
    case Command::selftest: return "selftest";
  }
  return "?";
}

std::optional<Command> command_from_string(const std::string& s) {
  for (auto c : {Command::scenario, Command::game, Command::fl, Command::metrics, Command::selftest})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

// ---------------------------------------------------------------- validation

namespace {

class Checker {
 public:
  explicit Checker(std::vector<std::string>& out) : out_(out) {}

  void fail(const std::string& msg) { out_.push_back(msg); }

  bool object(const json& j, const std::string& where) {
    if (j.is_object()) return true;
    fail(where + ": expected an object");
    return false;
  }

  // Required or optional typed fields; `path` prefixes the message.
  void uint(const json& j, const std::string& path, const std::string& f, bool required, std::int64_t lo = 0,
            std::int64_t hi = INT32_MAX) {
    if (!j.contains(f)) {
      if (required) fail(path + f + ": required field missing");
      return;
    }
    const auto& v = j[f];
    if (!v.is_number_integer() || v.get<std::int64_t>() < lo || v.get<std::int64_t>() > hi)
      fail(path + f + ": expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  void seed(const json& j, const std::string& path, const std::string& f, bool required) {
    if (!j.contains(f)) {
      if (required) fail(path + f + ": required field missing");
      return;
    }
    if (!j[f].is_number_unsigned() && !(j[f].is_number_integer() && j[f].get<std::int64_t>() >= 0))
      fail(path + f + ": expected an unsigned integer");
  }
  void real(const json& j, const std::string& path, const std::string& f, bool required, double lo, double hi) {
    if (!j.contains(f)) {
      if (required) fail(path + f + ": required field missing");
      return;
    }
    const auto& v = j[f];
    if (!v.is_number() || v.get<double>() < lo || v.get<double>() > hi)
      fail(path + f + ": expected a number in [" + num(lo) + ", " + num(hi) + "]");
  }
  void delta(const json& j, const std::string& path, const std::string& f) {
    if (!j.contains(f)) return;
    const auto& v = j[f];
    if (v.is_string() && v == "clean_error") return;
    if (v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0) return;
    fail(path + f + ": expected \"clean_error\" or a number in [0, 1]");
  }
  void scheme(const json& j, const std::string& path, const std::string& f, bool required) {
    if (!j.contains(f)) {
      if (required) fail(path + f + ": required field missing");
      return;
    }
    if (!is_scheme(j[f])) fail(path + f + ": expected \"param\" or \"trigger\"");
  }
  void boolean(const json& j, const std::string& path, const std::string& f) {
    if (j.contains(f) && !j[f].is_boolean()) fail(path + f + ": expected true or false");
  }
  void known(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!allowed.count(it.key())) fail(path + it.key() + ": unknown field");
  }

  static bool is_scheme(const json& v) {
    if (!v.is_string()) return false;
    try {
      wm::scheme_from_string(v.get<std::string>());
      return true;
    } catch (const InvalidParameter&) {
      return false;
    }
  }

 private:
  static std::string num(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  }
  std::vector<std::string>& out_;
};

void check_game(const json& j, Checker& c) {
  c.known(j, "", {"name", "bench_seed", "pool_size", "seed", "calibration", "spoil", "games"});
  c.seed(j, "", "bench_seed", true);
  c.seed(j, "", "seed", true);
  c.uint(j, "", "pool_size", false, 1, 1000);
  c.uint(j, "", "calibration", false, 1, 1000);
  if (j.contains("spoil") && c.object(j["spoil"], "spoil")) {
    c.known(j["spoil"], "spoil.", {"tune_epochs", "delta"});
    c.uint(j["spoil"], "spoil.", "tune_epochs", false, 1, 10000);
    c.delta(j["spoil"], "spoil.", "delta");
  }
  if (!j.contains("games")) {
    c.fail("games: required field missing");
    return;
  }
  if (!j["games"].is_array() || j["games"].empty()) {
    c.fail("games: expected a non-empty array");
    return;
  }
  static const std::set<std::string> kGames = {"covertness", "key_pp", "spoil", "clean"};
  static const std::set<std::string> kPlayers = {"null", "param-moment", "digit-residue", "trigger-probe", "shipped"};
  for (std::size_t i = 0; i < j["games"].size(); ++i) {
    const auto& g = j["games"][i];
    const auto p = "games[" + std::to_string(i) + "].";
    if (!c.object(g, "games[" + std::to_string(i) + "]")) continue;
    c.known(g, p, {"game", "scheme", "player", "trials", "expect"});
    if (!g.contains("game")) c.fail(p + "game: required field missing");
    else if (!g["game"].is_string() || !kGames.count(g["game"].get<std::string>()))
      c.fail(p + "game: expected one of covertness, key_pp, spoil, clean");
    c.scheme(g, p, "scheme", true);
    if (!g.contains("player")) c.fail(p + "player: required field missing");
    else if (!g["player"].is_string() || !kPlayers.count(g["player"].get<std::string>()))
      c.fail(p + "player: unknown player");
    c.uint(g, p, "trials", true, 1, 100000);
    if (g.contains("expect")) {
      const auto& e = g["expect"];
      if (!c.object(e, p + "expect")) continue;
      c.known(e, p + "expect.", {"within_band", "min_win_rate"});
      c.boolean(e, p + "expect.", "within_band");
      c.real(e, p + "expect.", "min_win_rate", false, 0.0, 1.0);
    }
  }
}

void check_fl_block(const json& j, const std::string& p, Checker& c) {
  c.uint(j, p, "clients", false, 1, 256);
  c.uint(j, p, "rounds", false, 1, 1000);
  c.uint(j, p, "local_epochs", false, 1, 1000);
  c.real(j, p, "local_lr", false, 1e-6, 10.0);
}

void check_fl(const json& j, Checker& c) {
  c.known(j, "", {"name", "bench_seed", "seed", "clients", "rounds", "local_epochs", "local_lr", "scheme",
                  "spoil_epochs", "aggregatable"});
  c.seed(j, "", "bench_seed", true);
  c.seed(j, "", "seed", true);
  check_fl_block(j, "", c);
  c.scheme(j, "", "scheme", false);
  c.uint(j, "", "spoil_epochs", false, 1, 10000);
  if (j.contains("aggregatable") && c.object(j["aggregatable"], "aggregatable")) {
    const auto& a = j["aggregatable"];
    c.known(a, "aggregatable.", {"owners", "trials", "schemes"});
    c.uint(a, "aggregatable.", "owners", true, 1, 64);
    c.uint(a, "aggregatable.", "trials", true, 1, 10000);
    if (!a.contains("schemes")) c.fail("aggregatable.schemes: required field missing");
    else if (!a["schemes"].is_array() || a["schemes"].empty()) c.fail("aggregatable.schemes: expected a non-empty array");
    else
      for (const auto& s : a["schemes"])
        if (!Checker::is_scheme(s)) c.fail("aggregatable.schemes: expected \"param\" or \"trigger\"");
  }
}

void check_metrics(const json& j, Checker& c) {
  c.known(j, "", {"name", "schemes", "seeds", "cap_limit", "q_max", "delta", "independence_trials", "spoil_trials",
                  "spoil_epochs", "embed_repeats", "fl"});
  if (!j.contains("schemes")) c.fail("schemes: required field missing");
  else if (!j["schemes"].is_array() || j["schemes"].empty()) c.fail("schemes: expected a non-empty array");
  else
    for (const auto& s : j["schemes"])
      if (!Checker::is_scheme(s)) c.fail("schemes: expected \"param\" or \"trigger\"");
  if (!j.contains("seeds")) c.fail("seeds: required field missing");
  else if (!j["seeds"].is_array() || j["seeds"].empty()) c.fail("seeds: expected a non-empty array");
  else
    for (const auto& s : j["seeds"])
      if (!s.is_number_integer() || s.get<std::int64_t>() < 0) c.fail("seeds: expected unsigned integers");
  c.uint(j, "", "cap_limit", false, 1, 100000);
  c.uint(j, "", "q_max", false, 2, 100000);
  c.delta(j, "", "delta");
  c.uint(j, "", "independence_trials", false, 1, 100000);
  c.uint(j, "", "spoil_trials", false, 1, 100000);
  c.uint(j, "", "spoil_epochs", false, 1, 10000);
  c.uint(j, "", "embed_repeats", false, 3, 1000);
  if (j.contains("fl") && c.object(j["fl"], "fl")) {
    c.known(j["fl"], "fl.", {"clients", "rounds", "local_epochs", "local_lr"});
    check_fl_block(j["fl"], "fl.", c);
  }
}

}  // namespace

std::vector<std::string> validate_config_json(const json& j, Command cmd) {
  std::vector<std::string> out;
  Checker c(out);
  if (cmd == Command::selftest) return out;
  if (!c.object(j, "config")) return out;
  switch (cmd) {
    case Command::scenario: return protocols::validate_scenario(j);
    case Command::game: check_game(j, c); break;
    case Command::fl: check_fl(j, c); break;
    case Command::metrics: check_metrics(j, c); break;
    case Command::selftest: break;
  }
  return out;
}

ConfigCheck validate_config(const std::string& path, Command cmd) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  ConfigCheck out;
  try {
    out.config = json::parse(in);
  } catch (const json::parse_error& e) {
    out.violations.push_back(std::string("parse error: ") + e.what());
    return out;
  }
  out.violations = validate_config_json(out.config, cmd);
  return out;
}

// ---------------------------------------------------------------- outputs

std::string manifest_text(const std::vector<Artifact>& artifacts, bool ok, const std::string& error) {
  std::string s = ok ? "status ok\n" : "status failed\n";
  if (!error.empty()) {
    auto e = error;
    for (auto& ch : e)
      if (ch == '\n') ch = ' ';
    s += "error " + e + "\n";
  }
  for (const auto& a : artifacts) {
    s += crypto::hash(a.content).hex() + "  " + a.name;
    if (a.timing) s += "  timing";
    s += "\n";
  }
  return s;
}

std::string replay_digest(const std::string& manifest) {
  std::istringstream in(manifest);
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.size() >= 8 && line.compare(line.size() - 8, 8, "  timing") == 0) continue;
    kept += line + "\n";
  }
  return crypto::hash(kept).hex();
}

namespace {

void write_atomic(const fs::path& p, const std::string& content) {
  const auto tmp = p.string() + ".part";
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) throw IoError("cannot write '" + tmp + "'");
    o << content;
    if (!o) throw IoError("write failed for '" + tmp + "'");
  }
  fs::rename(tmp, p);
}

}  // namespace

void write_outputs(const std::string& out_dir, const std::vector<Artifact>& artifacts, bool ok,
                   const std::string& error) {
  fs::create_directories(out_dir);
  for (const auto& a : artifacts) write_atomic(fs::path(out_dir) / a.name, a.content);
  write_atomic(fs::path(out_dir) / "MANIFEST", manifest_text(artifacts, ok, error));
}

// ---------------------------------------------------------------- commands

namespace {

double resolve_delta(const json& v, const bench::Benchmark& b) {
  if (v.is_string()) return b.clean_error();
  return v.get<double>();
}

CommandResult scenario_cmd(const json& cfg, const RunConfig& rc) {
  CommandResult out;
  auto r = protocols::run_scenario(cfg, rc.seed_override);
  out.artifacts.push_back({"transcript.json", r.transcript.dump(2) + "\n"});
  out.artifacts.push_back({"ledger.jsonl", r.log.export_jsonl()});
  out.failures = r.failures;
  return out;
}

void calibrate(adv::Distinguisher& d, const adv::GameSetup& setup, wm::SchemeId scheme, int n) {
  const auto& b = setup.bench;
  std::vector<nn::Model> clean, marked;
  for (int i = 0; i < n; ++i) {
    const auto ii = static_cast<std::uint64_t>(i);
    const auto& m = setup.clean_pool[ii % setup.clean_pool.size()];
    const auto key = wm::gen(scheme, b.spec.scheme.security_bits, m.arch, derive_seed(setup.seed, {0xca1, ii}), b.spec.scheme);
    clean.push_back(m);
    marked.push_back(wm::embed(m, key, b.train, b.embed_cfg(0xca100 + ii), b.spec.scheme).model);
  }
  d.calibrate(clean, marked, b.spec.scheme);
}

CommandResult game_cmd(const json& cfg, const RunConfig& rc) {
  CommandResult out;
  const auto seed = rc.seed_override.value_or(cfg.at("seed").get<std::uint64_t>());
  const auto b = bench::make_benchmark(cfg.at("bench_seed").get<std::uint64_t>());
  const auto setup = adv::make_game_setup(b, cfg.value("pool_size", 8), seed);
  const int n_cal = cfg.value("calibration", 8);
  adv::AttackBudget budget;
  budget.tune_epochs = 30;
  double delta = b.clean_error();
  if (cfg.contains("spoil")) {
    budget.tune_epochs = cfg["spoil"].value("tune_epochs", budget.tune_epochs);
    if (cfg["spoil"].contains("delta")) delta = resolve_delta(cfg["spoil"]["delta"], b);
  }
  budget.delta = delta;

  ojson results = ojson::array();
  std::string csv = "game,scheme,player,trials,wins,win_rate,advantage,band3\n";
  for (const auto& g : cfg.at("games")) {
    const auto game = g.at("game").get<std::string>();
    const auto scheme = wm::scheme_from_string(g.at("scheme").get<std::string>());
    const auto player = g.at("player").get<std::string>();
    const int trials = g.at("trials").get<int>();
    adv::GameOutcome o;
    if (game == "spoil") {
      if (player != "shipped") throw InvalidParameter("the spoil game is played by the \"shipped\" attack");
      o = adv::run_spoil_game(scheme, delta, trials, setup, adv::shipped_spoiler(budget, b.spec.scheme));
    } else {
      auto d = adv::make_distinguisher(player);
      if (game != "key_pp" && player != "null" && player != "digit-residue") calibrate(*d, setup, scheme, n_cal);
      if (game == "covertness") o = adv::run_covertness_game(scheme, *d, trials, setup);
      else if (game == "clean") o = adv::run_clean_game(scheme, *d, trials, setup);
      else o = adv::run_key_pp_game(scheme, *d, trials, setup);
    }
    ojson r;
    r["game"] = game;
    r["scheme"] = wm::to_string(scheme);
    r["player"] = o.player;
    r["trials"] = o.trials;
    r["wins"] = o.wins;
    r["win_rate"] = o.win_rate();
    r["advantage"] = o.advantage();
    r["band3"] = o.band3();
    if (g.contains("expect")) {
      const auto& e = g["expect"];
      bool met = true;
      if (e.contains("within_band")) met = met && ((std::abs(o.advantage()) <= o.band3()) == e["within_band"].get<bool>());
      if (e.contains("min_win_rate")) met = met && o.win_rate() >= e["min_win_rate"].get<double>();
      r["expect_met"] = met;
      if (!met) out.failures.push_back(game + "/" + wm::to_string(scheme) + "/" + player + ": expectation not met");
    }
    results.push_back(r);
    std::ostringstream line;
    line.precision(10);
    line << game << "," << wm::to_string(scheme) << "," << o.player << "," << o.trials << "," << o.wins << ","
         << o.win_rate() << "," << o.advantage() << "," << o.band3() << "\n";
    csv += line.str();
  }
  ojson doc;
  doc["seed"] = seed;
  doc["bench_seed"] = cfg.at("bench_seed");
  doc["results"] = results;
  out.artifacts.push_back({"games.json", doc.dump(2) + "\n"});
  out.artifacts.push_back({"games.csv", csv});
  return out;
}

fed::FlConfig fl_config(const json& j, std::uint64_t seed) {
  fed::FlConfig c;
  c.seed = seed;
  c.n_clients = j.value("clients", c.n_clients);
  c.rounds = j.value("rounds", c.rounds);
  c.local_cfg.epochs = j.value("local_epochs", c.local_cfg.epochs);
  c.local_cfg.learning_rate = j.value("local_lr", c.local_cfg.learning_rate);
  if (j.contains("scheme")) c.wm_scheme = wm::scheme_from_string(j["scheme"].get<std::string>());
  return c;
}

CommandResult fl_cmd(const json& cfg, const RunConfig& rc) {
  CommandResult out;
  const auto seed = rc.seed_override.value_or(cfg.at("seed").get<std::uint64_t>());
  const auto b = bench::make_benchmark(cfg.at("bench_seed").get<std::uint64_t>());
  auto fc = fl_config(cfg, seed);
  fc.scheme = b.spec.scheme;
  auto st = fed::fl_init(nn::init_model(b.arch), b.train, b.test, fc);
  for (int r = 0; r < fc.rounds; ++r) fed::fl_round(st);

  ojson doc;
  doc["seed"] = seed;
  doc["bench_seed"] = cfg.at("bench_seed");
  doc["clients"] = fc.n_clients;
  doc["rounds"] = fc.rounds;
  doc["scheme"] = wm::to_string(fc.wm_scheme);
  doc["central_accuracy"] = b.clean_accuracy;
  ojson acc = ojson::array();
  ojson timing = ojson::array();
  for (const auto& r : st.rounds) {
    acc.push_back(r.global_accuracy);
    timing.push_back({{"round", r.round}, {"embed_times_ms", r.embed_times_ms}});
  }
  doc["round_accuracy"] = acc;

  // Leak sweep: every distributed copy must trace to exactly its recipient.
  int correct = 0, wrong = 0, missed = 0, ambiguous = 0;
  for (const auto& r : st.rounds) {
    for (std::size_t k = 0; k < r.distributed.size(); ++k) {
      try {
        const auto t = fed::trace_traitor(r.distributed[k], st.clients);
        if (!t) ++missed;
        else if (*t == static_cast<int>(k) + 1) ++correct;
        else ++wrong;
      } catch (const AmbiguityError&) {
        ++ambiguous;
      }
    }
  }
  const int leaks = fc.rounds * fc.n_clients;
  doc["leak_sweep"] = {{"leaks", leaks}, {"traced", correct}, {"false_accusations", wrong}, {"missed", missed},
                       {"ambiguous", ambiguous}};
  if (correct != leaks || wrong != 0) out.failures.push_back("leak sweep did not trace every recipient");

  ledger::Community com;
  com.register_participant(st.aggregator_kp.verifying_key());
  std::optional<fed::FinalizeResult> fin;
  try {
    fin = fed::fl_finalize(st, com);
  } catch (const CapacityError& e) {
    doc["finalize_error"] = e.what();
    out.failures.push_back(std::string("finalize: ") + e.what());
  }
  if (fin) {
    doc["final_accuracy"] = nn::accuracy(fin->model, b.test);
    doc["merkle_root"] = fin->evidence.tree.root().hex();
    int verified = 0;
    ojson per = ojson::array();
    for (const auto& c : st.clients) {
      const bool v = wm::verify(fin->model, c.key, fin->verifiers[static_cast<std::size_t>(c.index)]);
      per.push_back(v);
      verified += v;
    }
    doc["independent_verification"] = per;
    if (verified != fc.n_clients) out.failures.push_back("not every client verifies the final model");

    int accepted = 0, pairs = 0;
    for (const auto& imp : st.clients)
      for (const auto& vic : st.clients) {
        if (imp.index == vic.index) continue;
        ++pairs;
        accepted += fed::falsification_accepted(*fin, fin->model, imp, vic.index);
      }
    doc["falsification"] = {{"pairs", pairs}, {"accepted", accepted}};
    if (accepted) out.failures.push_back("a falsified claim was accepted");

    std::vector<std::optional<Bytes>> ev(fin->evidence.evidence.begin(), fin->evidence.evidence.end());
    adv::AttackBudget bud;
    bud.tune_epochs = cfg.value("spoil_epochs", 30);
    bud.delta = b.clean_error();
    int recovered = 0;
    ojson rec = ojson::array();
    for (const auto& c : st.clients) {
      const auto& v = fin->verifiers[static_cast<std::size_t>(c.index)];
      bud.seed = derive_seed(seed, {0xf1, static_cast<std::uint64_t>(c.index)});
      bool spoiled = false;
      try {
        spoiled = !wm::verify(adv::spoil(fin->model, c.key, v, b.train, bud, b.spec.scheme), c.key, v);
      } catch (const adv::SpoilFailure&) {
      }
      const auto p = fed::recover_proof(com.log(), c.index, ev);
      const bool own_leaf = p.proof.leaf == crypto::hash(fed::evidence_bytes(c.key, v, static_cast<std::uint32_t>(c.index)));
      const bool ok = spoiled && p.valid && own_leaf;
      recovered += ok;
      rec.push_back({{"client", c.index}, {"spoiled", spoiled}, {"proof_valid", p.valid},
                     {"anchor_seq", p.anchor_seq ? ojson(*p.anchor_seq) : ojson(nullptr)}});
    }
    doc["recovery"] = rec;
    if (recovered != fc.n_clients) out.failures.push_back("recovery did not re-anchor every client");
  }

  if (cfg.contains("aggregatable")) {
    const auto& a = cfg["aggregatable"];
    ojson reps = ojson::array();
    for (const auto& s : a.at("schemes")) {
      const auto scheme = wm::scheme_from_string(s.get<std::string>());
      const auto rep = fed::check_aggregatable(scheme, a.at("owners").get<int>(), a.at("trials").get<int>(), b.clean,
                                               b.train, b.embed_cfg(), b.spec.scheme, derive_seed(seed, {0xa6}));
      reps.push_back({{"scheme", wm::to_string(scheme)}, {"owners", rep.n_owners}, {"trials", rep.trials},
                      {"epsilon", rep.epsilon}, {"pass_rate", rep.pass_rate}, {"aggregatable", rep.aggregatable}});
    }
    doc["aggregatable"] = reps;
  }

  out.artifacts.push_back({"fl.json", doc.dump(2) + "\n"});
  out.artifacts.push_back({"ledger.jsonl", com.log().export_jsonl()});
  out.artifacts.push_back({"timing.json", ojson{{"rounds", timing}}.dump(2) + "\n", true});
  return out;
}

CommandResult metrics_cmd(const json& cfg, const RunConfig& rc) {
  std::vector<std::uint64_t> seeds;
  if (rc.seed_override) seeds.push_back(*rc.seed_override);
  else
    for (const auto& s : cfg.at("seeds")) seeds.push_back(s.get<std::uint64_t>());

  std::vector<std::pair<wm::SchemeId, metrics::MetricsConfig>> jobs;
  for (auto seed : seeds)
    for (const auto& s : cfg.at("schemes")) {
      metrics::MetricsConfig m;
      m.bench_seed = seed;
      m.fl.seed = seed;
      m.cap_limit = cfg.value("cap_limit", m.cap_limit);
      m.q_max = cfg.value("q_max", m.q_max);
      if (cfg.contains("delta") && cfg["delta"].is_number()) m.delta = cfg["delta"].get<double>();
      m.independence_trials = cfg.value("independence_trials", m.independence_trials);
      m.spoil_trials = cfg.value("spoil_trials", m.spoil_trials);
      m.spoil_budget.tune_epochs = cfg.value("spoil_epochs", m.spoil_budget.tune_epochs);
      m.embed_repeats = cfg.value("embed_repeats", m.embed_repeats);
      if (cfg.contains("fl")) {
        const auto fc = fl_config(cfg["fl"], seed);
        m.fl.n_clients = fc.n_clients;
        m.fl.rounds = fc.rounds;
        m.fl.local_cfg = fc.local_cfg;
      }
      jobs.emplace_back(wm::scheme_from_string(s.get<std::string>()), m);
    }

  // Non-timing work fans out; embed timing runs afterwards, one job at a time.
  std::vector<metrics::MetricsReport> reports(jobs.size());
  const std::size_t width = static_cast<std::size_t>(std::max(1, rc.jobs));
  for (std::size_t start = 0; start < jobs.size(); start += width) {
    std::vector<std::future<metrics::MetricsReport>> batch;
    for (std::size_t i = start; i < std::min(jobs.size(), start + width); ++i)
      batch.push_back(std::async(width == 1 ? std::launch::deferred : std::launch::async,
                                 [&, i] { return metrics::run_metrics(jobs[i].first, jobs[i].second, false); }));
    for (std::size_t i = 0; i < batch.size(); ++i) reports[start + i] = batch[i].get();
  }
  for (std::size_t i = 0; i < jobs.size(); ++i)
    reports[i].d_embed_time_ms = metrics::run_embed_timing(jobs[i].first, jobs[i].second);

  const auto r = metrics::render_report(reports);
  CommandResult out;
  out.artifacts.push_back({"metrics.csv", r.csv});
  out.artifacts.push_back({"metrics.json", r.json});
  out.artifacts.push_back({"timing.csv", r.timing_csv, true});
  out.artifacts.push_back({"timing.json", r.timing_json, true});
  return out;
}

// Degenerate and definitional cases; each must hold exactly.
CommandResult selftest_cmd() {
  CommandResult out;
  std::string log;
  auto check = [&](const std::string& name, bool ok) {
    log += (ok ? "pass " : "FAIL ") + name + "\n";
    if (!ok) out.failures.push_back(name);
  };

  check("empty report renders header only",
        metrics::render_report({}).csv == "scheme,metric,value,unit,seed,config_hash\n");

  const crypto::Digest leaf = crypto::hash(std::string_view("leaf"));
  const std::vector<crypto::Digest> one{leaf};
  crypto::MerkleTree t1(one);
  check("single-leaf tree root is the leaf hash", t1.root() == leaf);
  check("single-leaf proof checks", crypto::merkle_check(t1.prove(0)));

  ledger::Ledger empty;
  check("empty ledger audits", empty.audit().ok);
  check("empty ledger has no timestamp", !empty.lookup_timestamp(crypto::hash(std::string_view("x"))).has_value());

  const nn::ArchDescriptor arch{{4, 8, 3}, nn::Activation::relu, 1};
  const auto m = nn::init_model(arch);
  const auto key = wm::gen(wm::SchemeId::ParamEmbed, 128, arch, 1);
  check("key round-trips", wm::WatermarkKey::deserialize(key.serialize()) == key);
  const auto v = wm::make_verifier(key, arch);
  check("verifier round-trips", wm::Verifier::deserialize(v.serialize()) == v);

  const std::vector<nn::Model> same{m, m};
  check("average of identical models is the model", fed::average(same).params == m.params);

  check("tally with no voters is inconclusive", !ledger::VoteTally(crypto::hash(std::string_view("r")), 0, 0.5).outcome());

  out.artifacts.push_back({"selftest.txt", log});
  return out;
}

}  // namespace

CommandResult run_command(const RunConfig& rc, const json& config) {
  switch (rc.command) {
    case Command::scenario: return scenario_cmd(config, rc);
    case Command::game: return game_cmd(config, rc);
    case Command::fl: return fl_cmd(config, rc);
    case Command::metrics: return metrics_cmd(config, rc);
    case Command::selftest: return selftest_cmd();
  }
  return {};
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ovnet: ownership verification simulator"};
  app.require_subcommand(1);
  RunConfig rc;
  std::uint64_t seed = 0;
  std::map<Command, CLI::App*> subs;
  for (auto c : {Command::scenario, Command::game, Command::fl, Command::metrics, Command::selftest}) {
    auto* s = app.add_subcommand(to_string(c));
    if (c != Command::selftest) s->add_option("--config", rc.config_path, "config file (JSON)")->required();
    s->add_option("--out", rc.out_dir, "output directory");
    s->add_option("--seed", seed, "override the config seed");
    s->add_option("--jobs", rc.jobs, "parallel jobs")->check(CLI::Range(1, 256));
    s->add_flag("--verbose,-v", rc.verbosity, "more output");
    subs[c] = s;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }
  for (auto& [c, s] : subs)
    if (s->parsed()) {
      rc.command = c;
      if (s->count("--seed")) rc.seed_override = seed;
    }

  json config;
  if (rc.command != Command::selftest) {
    ConfigCheck chk;
    try {
      chk = validate_config(rc.config_path, rc.command);
    } catch (const IoError& e) {
      err << e.what() << "\n";
      return 2;
    }
    if (!chk.ok()) {
      err << "config " << rc.config_path << " has " << chk.violations.size() << " violation(s):\n";
      for (const auto& v : chk.violations) err << "  " << v << "\n";
      return 2;
    }
    config = chk.config;
  }

  try {
    auto res = run_command(rc, config);
    write_outputs(rc.out_dir, res.artifacts, res.ok());
    if (rc.verbosity > 0)
      for (const auto& a : res.artifacts) out << a.name << "\n";
    for (const auto& f : res.failures) err << "failure: " << f << "\n";
    out << to_string(rc.command) << ": " << (res.ok() ? "ok" : "FAILED") << " (" << rc.out_dir << "/MANIFEST)\n";
    return res.ok() ? 0 : 1;
  } catch (const InvalidParameter& e) {
    write_outputs(rc.out_dir, {}, false, e.what());
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    write_outputs(rc.out_dir, {}, false, e.what());
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ovnet::cli
