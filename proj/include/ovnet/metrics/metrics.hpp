#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ovnet/adversary/attacks.hpp"
#include "ovnet/bench.hpp"
#include "ovnet/fedwm/merkle_sign.hpp"

namespace ovnet::metrics {

struct CapacityResult {
  double delta = 0.0;
  int count = 0;
  bool hit_limit = false;
  double baseline_accuracy = 0.0;
  std::vector<double> accuracy_trace;  // test accuracy after each embedding, raw
  std::string stop_reason;             // empty when the limit was hit
};

/// Embeds fresh keys one at a time until an earlier watermark stops
/// verifying, accuracy falls more than delta below the clean baseline, an
/// embedding fails, or cap_limit is reached. Keys derive from (seed, i).
CapacityResult measure_capacity(wm::SchemeId scheme, const bench::Benchmark& b, double delta, int cap_limit,
                                std::uint64_t seed);

struct IndependenceResult {
  int q = 0;
  int trials = 0;
  int spoil_failures = 0;       // trials where the spoil attack gave up; excluded from the means
  double r_over_q = 0.0;        // paper-comparable: the spoiled watermark stays in the denominator
  double r_over_q_minus_1 = 0.0;  // survival rate of the untouched watermarks
  std::vector<int> spoiled;     // index spoiled per trial
  std::vector<int> survivors;   // r per trial (-1 for a failed spoil)
};

/// Embeds Q watermarks once, then per trial spoils one uniformly chosen
/// watermark of that model and counts how many of the others still verify.
/// Throws CapacityError when the Q watermarks do not all verify after embedding.
IndependenceResult measure_independence(wm::SchemeId scheme, const bench::Benchmark& b, int q, int trials,
                                        const adv::AttackBudget& budget, std::uint64_t seed);

/// Median wall-clock milliseconds of embed over `repeats` fresh keys.
double measure_embed_time(wm::SchemeId scheme, const bench::Benchmark& b, int repeats, std::uint64_t seed);

struct FlDecline {
  double central_accuracy = 0.0;
  std::optional<double> fl_accuracy;  // nullopt when the final embedding exceeded capacity
  std::optional<double> decline;
  std::string note;
};

/// Central training accuracy minus the accuracy of the Merkle-Sign final
/// model. `scheme` = nullopt runs plain federated averaging (the control).
FlDecline measure_fl_decline(const bench::Benchmark& b, fed::FlConfig cfg, std::optional<wm::SchemeId> scheme);

struct SpoilDecline {
  int trials = 0;
  int successes = 0;
  double mean_decline = 0.0;  // accuracy points over successful spoils
};

/// Metric A: accuracy lost by the shipped spoil attack.
SpoilDecline measure_spoil_decline(wm::SchemeId scheme, const bench::Benchmark& b, int trials,
                                   const adv::AttackBudget& budget, std::uint64_t seed);

struct MetricsReport {
  wm::SchemeId scheme = wm::SchemeId::ParamEmbed;
  std::uint64_t seed = 0;
  SpoilDecline a_spoil;
  CapacityResult b_capacity;
  int cap_limit = 64;
  IndependenceResult c_independence;
  double d_embed_time_ms = 0.0;
  FlDecline e_fl;
  nlohmann::ordered_json config;
};

/// One metrics sweep for one scheme. delta < 0 means "clean error rate".
struct MetricsConfig {
  std::uint64_t bench_seed = 0;
  double delta = -1.0;
  int cap_limit = 64;
  int q_max = 16;  // Q = min(q_max, measured capacity)
  int independence_trials = 5;
  int spoil_trials = 5;
  int embed_repeats = 3;
  adv::AttackBudget spoil_budget{30, 0.1, 0.0, 0.05, 32, 1.0, 0.5, 2.0, 0};
  fed::FlConfig fl;

  nlohmann::ordered_json to_json() const;
};

/// All five metrics for one scheme on one benchmark. with_timing = false
/// skips metric D so the job can share the machine.
MetricsReport run_metrics(wm::SchemeId scheme, const MetricsConfig& cfg, bool with_timing = true);
/// Metric D alone, with the seeds run_metrics would use.
double run_embed_timing(wm::SchemeId scheme, const MetricsConfig& cfg);

struct RenderedReport {
  std::string csv;          // non-timing metrics, long format
  std::string json;         // non-timing metrics with config and seed block
  std::string timing_csv;   // metric D only
  std::string timing_json;
};

/// CSV columns: scheme, metric, value, unit, seed, config_hash.
RenderedReport render_report(const std::vector<MetricsReport>& results);

}  // namespace ovnet::metrics
