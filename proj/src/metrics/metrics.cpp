#include "ovnet/metrics/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "ovnet/crypto/hash.hpp"
#include "ovnet/ledger/ledger.hpp"
#include "ovnet/rng.hpp"

namespace ovnet::metrics {

namespace {

constexpr std::uint64_t kCapTag = 0x3a;
constexpr std::uint64_t kIndTag = 0x3b;
constexpr std::uint64_t kTimeTag = 0x3c;
constexpr std::uint64_t kSpoilTag = 0x3d;

bool all_verify(const nn::Model& m, std::span<const wm::WatermarkKey> keys, std::span<const wm::Verifier> vs) {
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (!wm::verify(m, keys[i], vs[i])) return false;
  return true;
}

// Capacity and independence walk the same key sequence, so any Q up to a
// measured capacity is known to fit.
struct Sequence {
  nn::Model model;
  std::vector<wm::WatermarkKey> keys;
  std::vector<wm::Verifier> verifiers;
};

void extend(Sequence& s, wm::SchemeId scheme, const bench::Benchmark& b, std::uint64_t seed) {
  const auto& scfg = b.spec.scheme;
  const auto i = static_cast<std::uint64_t>(s.keys.size());
  auto key = wm::gen(scheme, scfg.security_bits, b.arch, derive_seed(seed, {kCapTag, i}), scfg, s.keys);
  auto r = wm::embed(s.model, key, b.train, b.embed_cfg(0x3a00 + i), scfg);
  s.model = std::move(r.model);
  s.keys.push_back(std::move(key));
  s.verifiers.push_back(r.verifier);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

CapacityResult measure_capacity(wm::SchemeId scheme, const bench::Benchmark& b, double delta, int cap_limit,
                                std::uint64_t seed) {
  if (delta < 0.0) throw InvalidParameter("delta must be non-negative");
  if (cap_limit < 1) throw InvalidParameter("cap_limit must be at least 1");
  CapacityResult out;
  out.delta = delta;
  out.baseline_accuracy = nn::accuracy(b.clean, b.test);

  Sequence seq{b.clean, {}, {}};
  for (int i = 0; i < cap_limit; ++i) {
    try {
      extend(seq, scheme, b, seed);
    } catch (const Error& e) {
      out.stop_reason = "embedding " + std::to_string(i) + " failed: " + e.what();
      return out;
    }
    const auto& m = seq.model;
    const auto& keys = seq.keys;
    const auto& vs = seq.verifiers;
    const double acc = nn::accuracy(m, b.test);
    out.accuracy_trace.push_back(acc);
    for (std::size_t j = 0; j < keys.size(); ++j) {
      if (!wm::verify(m, keys[j], vs[j])) {
        out.stop_reason = "watermark " + std::to_string(j) + " stopped verifying after embedding " + std::to_string(i);
        return out;
      }
    }
    if (out.baseline_accuracy - acc > delta) {
      out.stop_reason = "accuracy fell by more than delta after embedding " + std::to_string(i);
      return out;
    }
    out.count = i + 1;
  }
  out.hit_limit = true;
  return out;
}

IndependenceResult measure_independence(wm::SchemeId scheme, const bench::Benchmark& b, int q, int trials,
                                        const adv::AttackBudget& budget, std::uint64_t seed) {
  if (q < 2) throw InvalidParameter("independence needs Q >= 2");
  if (trials < 1) throw InvalidParameter("trials must be positive");
  const auto& scfg = b.spec.scheme;
  Sequence em{b.clean, {}, {}};
  try {
    for (int i = 0; i < q; ++i) extend(em, scheme, b, seed);
  } catch (const Error& e) {
    throw CapacityError("Q = " + std::to_string(q) + " exceeds capacity (" + e.what() + "); use a smaller Q");
  }
  const auto& keys = em.keys;
  if (!all_verify(em.model, keys, em.verifiers))
    throw CapacityError("Q = " + std::to_string(q) + " watermarks do not all verify; use a smaller Q");

  IndependenceResult out;
  out.q = q;
  out.trials = trials;
  double sum_q = 0.0, sum_q1 = 0.0;
  int used = 0;
  for (int t = 0; t < trials; ++t) {
    const auto tt = static_cast<std::uint64_t>(t);
    Rng rng(derive_seed(seed, {kIndTag + 1, tt}));
    const int victim = static_cast<int>(rng.below(static_cast<std::uint64_t>(q)));
    out.spoiled.push_back(victim);
    auto bud = budget;
    bud.seed = derive_seed(seed, {kIndTag + 2, tt});
    nn::Model sp;
    try {
      sp = adv::spoil(em.model, keys[victim], em.verifiers[victim], b.train, bud, scfg);
    } catch (const adv::SpoilFailure&) {
      ++out.spoil_failures;
      out.survivors.push_back(-1);
      continue;
    }
    int r = 0;
    for (int j = 0; j < q; ++j)
      if (j != victim && wm::verify(sp, keys[j], em.verifiers[j])) ++r;
    out.survivors.push_back(r);
    sum_q += static_cast<double>(r) / q;
    sum_q1 += static_cast<double>(r) / (q - 1);
    ++used;
  }
  if (used > 0) {
    out.r_over_q = sum_q / used;
    out.r_over_q_minus_1 = sum_q1 / used;
  }
  return out;
}

double measure_embed_time(wm::SchemeId scheme, const bench::Benchmark& b, int repeats, std::uint64_t seed) {
  if (repeats < 3) throw InvalidParameter("embed timing needs at least 3 repeats");
  const auto& scfg = b.spec.scheme;
  std::vector<double> ms;
  for (int i = 0; i < repeats; ++i) {
    const auto ii = static_cast<std::uint64_t>(i);
    const auto key = wm::gen(scheme, scfg.security_bits, b.arch, derive_seed(seed, {kTimeTag, ii}), scfg);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = wm::embed(b.clean, key, b.train, b.embed_cfg(0x3c00 + ii), scfg);
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    (void)r;
  }
  std::sort(ms.begin(), ms.end());
  const auto n = ms.size();
  return n % 2 ? ms[n / 2] : (ms[n / 2 - 1] + ms[n / 2]) / 2.0;
}

FlDecline measure_fl_decline(const bench::Benchmark& b, fed::FlConfig cfg, std::optional<wm::SchemeId> scheme) {
  FlDecline out;
  out.central_accuracy = b.clean_accuracy;
  cfg.watermark = scheme.has_value();
  if (scheme) cfg.wm_scheme = *scheme;
  cfg.scheme = b.spec.scheme;
  auto state = fed::fl_init(nn::init_model(b.arch), b.train, b.test, cfg);
  for (int r = 0; r < cfg.rounds; ++r) fed::fl_round(state);
  if (!scheme) {
    out.fl_accuracy = nn::accuracy(state.global, b.test);
  } else {
    ledger::Community com;
    com.register_participant(state.aggregator_kp.verifying_key());
    try {
      out.fl_accuracy = nn::accuracy(fed::fl_finalize(state, com).model, b.test);
    } catch (const CapacityError& e) {
      out.note = std::string("final embedding exceeded capacity: ") + e.what();
      return out;
    }
  }
  out.decline = out.central_accuracy - *out.fl_accuracy;
  return out;
}

SpoilDecline measure_spoil_decline(wm::SchemeId scheme, const bench::Benchmark& b, int trials,
                                   const adv::AttackBudget& budget, std::uint64_t seed) {
  if (trials < 1) throw InvalidParameter("trials must be positive");
  const auto& scfg = b.spec.scheme;
  SpoilDecline out;
  out.trials = trials;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto tt = static_cast<std::uint64_t>(t);
    const auto key = wm::gen(scheme, scfg.security_bits, b.arch, derive_seed(seed, {kSpoilTag, tt}), scfg);
    const auto r = wm::embed(b.clean, key, b.train, b.embed_cfg(0x3d00 + tt), scfg);
    auto bud = budget;
    bud.seed = derive_seed(seed, {kSpoilTag + 1, tt});
    try {
      const auto sp = adv::spoil(r.model, key, r.verifier, b.train, bud, scfg);
      if (wm::verify(sp, key, r.verifier)) continue;
      sum += nn::accuracy(r.model, b.test) - nn::accuracy(sp, b.test);
      ++out.successes;
    } catch (const adv::SpoilFailure&) {
    }
  }
  if (out.successes) out.mean_decline = 100.0 * sum / out.successes;
  return out;
}

nlohmann::ordered_json MetricsConfig::to_json() const {
  nlohmann::ordered_json j;
  j["bench_seed"] = bench_seed;
  j["delta"] = delta;
  j["cap_limit"] = cap_limit;
  j["q_max"] = q_max;
  j["independence_trials"] = independence_trials;
  j["spoil_trials"] = spoil_trials;
  j["embed_repeats"] = embed_repeats;
  j["spoil_budget"] = {{"tune_epochs", spoil_budget.tune_epochs},
                       {"learning_rate", spoil_budget.learning_rate},
                       {"batch_size", spoil_budget.batch_size},
                       {"clean_weight", spoil_budget.clean_weight},
                       {"push", spoil_budget.push},
                       {"spoil_margin", spoil_budget.spoil_margin}};
  j["fl"] = {{"n_clients", fl.n_clients},
             {"rounds", fl.rounds},
             {"local_epochs", fl.local_cfg.epochs},
             {"local_lr", fl.local_cfg.learning_rate},
             {"seed", fl.seed}};
  return j;
}

namespace {
std::uint64_t scheme_seed(wm::SchemeId scheme, const MetricsConfig& cfg) {
  return derive_seed(cfg.bench_seed, {static_cast<std::uint64_t>(scheme)});
}
}  // namespace

double run_embed_timing(wm::SchemeId scheme, const MetricsConfig& cfg) {
  return measure_embed_time(scheme, bench::make_benchmark(cfg.bench_seed), cfg.embed_repeats, scheme_seed(scheme, cfg));
}

MetricsReport run_metrics(wm::SchemeId scheme, const MetricsConfig& cfg, bool with_timing) {
  const auto b = bench::make_benchmark(cfg.bench_seed);
  const double delta = cfg.delta < 0.0 ? b.clean_error() : cfg.delta;
  MetricsReport rep;
  rep.scheme = scheme;
  rep.seed = cfg.bench_seed;
  rep.cap_limit = cfg.cap_limit;
  rep.config = cfg.to_json();
  rep.config["scheme"] = wm::to_string(scheme);
  rep.config["delta_resolved"] = delta;

  auto budget = cfg.spoil_budget;
  budget.delta = delta;
  const auto s = scheme_seed(scheme, cfg);
  rep.a_spoil = measure_spoil_decline(scheme, b, cfg.spoil_trials, budget, s);
  rep.b_capacity = measure_capacity(scheme, b, delta, cfg.cap_limit, s);
  const int q = std::min(cfg.q_max, rep.b_capacity.count);
  if (q >= 2) {
    rep.c_independence = measure_independence(scheme, b, q, cfg.independence_trials, budget, s);
  } else {
    rep.c_independence.q = q;  // capacity below two: the score is undefined and reported as 0
  }
  if (with_timing) rep.d_embed_time_ms = measure_embed_time(scheme, b, cfg.embed_repeats, s);
  rep.e_fl = measure_fl_decline(b, cfg.fl, scheme);
  return rep;
}

RenderedReport render_report(const std::vector<MetricsReport>& results) {
  RenderedReport out;
  const std::string header = "scheme,metric,value,unit,seed,config_hash\n";
  out.csv = header;
  out.timing_csv = header;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  nlohmann::ordered_json trows = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    const auto scheme = wm::to_string(r.scheme);
    const auto chash = crypto::hash(r.config.dump()).hex().substr(0, 16);
    const auto seed = std::to_string(r.seed);
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    auto row = [&](const std::string& metric, const std::string& value, const std::string& unit) {
      out.csv += scheme + "," + metric + "," + value + "," + unit + "," + seed + "," + chash + "\n";
      cells.push_back({{"metric", metric}, {"value", value}, {"unit", unit}});
    };
    row("A_spoil_decline", num(r.a_spoil.mean_decline), "pp");
    row("A_spoil_successes", std::to_string(r.a_spoil.successes) + "/" + std::to_string(r.a_spoil.trials), "trials");
    const auto cap = std::to_string(r.b_capacity.count);
    row("B_capacity", r.b_capacity.hit_limit ? ">=" + cap : cap, "watermarks");
    row("B_delta", num(r.b_capacity.delta), "fraction");
    row("C_independence_r_over_q", num(r.c_independence.r_over_q), "fraction");
    row("C_independence_r_over_q_minus_1", num(r.c_independence.r_over_q_minus_1), "fraction");
    row("C_q", std::to_string(r.c_independence.q), "watermarks");
    row("C_spoil_failures", std::to_string(r.c_independence.spoil_failures), "trials");
    row("E_fl_decline", r.e_fl.decline ? num(100.0 * *r.e_fl.decline) : "null", "pp");
    row("E_fl_clients", std::to_string(r.config.value("fl", nlohmann::ordered_json::object()).value("n_clients", 0)),
        "clients");

    nlohmann::ordered_json entry;
    entry["scheme"] = scheme;
    entry["seed"] = r.seed;
    entry["config_hash"] = chash;
    entry["config"] = r.config;
    entry["metrics"] = cells;
    entry["capacity_trace"] = r.b_capacity.accuracy_trace;
    entry["capacity_stop"] = r.b_capacity.stop_reason;
    entry["independence_spoiled"] = r.c_independence.spoiled;
    entry["independence_survivors"] = r.c_independence.survivors;
    if (!r.e_fl.note.empty()) entry["fl_note"] = r.e_fl.note;
    rows.push_back(entry);

    out.timing_csv += scheme + ",D_embed_time_ms," + num(r.d_embed_time_ms) + ",ms," + seed + "," + chash + "\n";
    trows.push_back({{"scheme", scheme}, {"seed", r.seed}, {"config_hash", chash}, {"D_embed_time_ms", r.d_embed_time_ms}});
  }
  out.json = nlohmann::ordered_json{{"results", rows}}.dump(2) + "\n";
  out.timing_json = nlohmann::ordered_json{{"timing", trows}}.dump(2) + "\n";
  return out;
}

}  // namespace ovnet::metrics
