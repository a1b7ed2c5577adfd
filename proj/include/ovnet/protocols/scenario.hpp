#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ovnet/ledger/ledger.hpp"

namespace ovnet::protocols {

// Scenario scripts are JSON objects:
//
//   { "name": ..., "seed": 7, "scheme": "param",
//     "network": { "agents": 5, "malicious": 0, "participation": 1.0,
//                  "quorum": 0.5, "fee": 1, "endowment": 10 },
//     "actors": ["owner", "pirate"],
//     "steps": [ { "op": "embed", ... }, ... ] }
//
// Steps (model "clean" is the benchmark's clean model):
//   embed     actor key model out    generate `key` for `actor` if new, embed it
//   overwrite actor key model out    same as embed, by an adversary
//   commit    actor key              ownership record on the ledger
//   ov        actor key model        decentralized ownership verification
//   eavesdrop actor request as       capture evidence from broadcast `request` (negative counts from the end)
//   spoil     actor key model out    spoil attack with held evidence
//   verify    key model              local ground truth
//   dispute   model claims[{actor,key}]
//   audit
// Any step may carry "expect"; mismatches are collected, not thrown.

struct ScenarioResult {
  nlohmann::ordered_json transcript;
  std::vector<std::string> failures;
  ledger::Ledger log;
  bool ok() const { return failures.empty(); }
};

ScenarioResult run_scenario(const nlohmann::json& script, std::optional<std::uint64_t> seed_override = {});

/// Schema violations, all of them; empty when the script is well formed.
std::vector<std::string> validate_scenario(const nlohmann::json& script);

}  // namespace ovnet::protocols
