#pragma once

// Ethics Verification Agent: validates proposed actions against the sealed
// policy, scores uncertainty, and checks runtime integrity (policy-hash
// drift against the Genesis Lock). Pure functions over immutable values.

#include <functional>
#include <optional>
#include <set>
#include <string>

#include "aegis/genesis.hpp"
#include "aegis/iepl.hpp"

namespace aegis::eva {

using json = canonical::json;
using iepl::PolicyHash;

struct MalformedAction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Origin { INTERNAL, THIRD_PARTY };

std::string origin_name(Origin o);
Origin origin_from_name(const std::string& name);

// A candidate emission. The content itself never enters the gate — only its
// SHA3-256 commitment.
struct ActionProposal {
  std::string action_id;
  std::string category;
  std::set<std::string> tags;
  std::string resource;  // path / URI the emission targets
  crypto::Digest payload_digest;
  std::optional<double> declared_risk;  // in [0,1] when present
  Origin origin = Origin::INTERNAL;

  bool operator==(const ActionProposal&) const = default;
};

json to_json(const ActionProposal& a);
ActionProposal action_from_json(const json& j);  // throws MalformedAction
std::string canonicalize(const ActionProposal& a);
ActionProposal parse_action(std::string_view canonical_bytes);

// How the verdict was reached; compliant is true only for ALLOW.
enum class Ruling { ALLOW, DENY, DEFER, PROHIBITED, FALLBACK };

// matched_rule sentinels for the non-rule outcomes.
inline constexpr const char* kFallbackDeny = "FALLBACK_DENY";
inline constexpr const char* kProhibitedOperation = "PROHIBITED_OPERATION";

struct Verdict {
  bool compliant = false;      // v of the publish loop
  std::string matched_rule;    // rule_id, FALLBACK_DENY or PROHIBITED_OPERATION
  Ruling ruling = Ruling::FALLBACK;
  double uncertainty = 0.0;    // u of the publish loop
  PolicyHash evaluated_against;
};

// Pluggable risk scorer; consulted only when the action declares no risk.
using UncertaintyScorer = std::function<double(const ActionProposal&)>;

// declared_risk when present, else the scorer, else 0.
double uncertainty(const ActionProposal& action, const UncertaintyScorer& scorer = {});

bool matches(const iepl::MatchPredicate& predicate, const ActionProposal& action);

// Deterministic: prohibited category dominates, then first matching rule
// (ALLOW -> compliant, DENY/DEFER -> not), then FALLBACK_DENY.
// policy_hash must be seal(doc) — the caller usually has it cached.
Verdict validate_action(const ActionProposal& action, const iepl::PolicyDocument& doc,
                        const PolicyHash& policy_hash, const UncertaintyScorer& scorer = {});
Verdict validate_action(const ActionProposal& action, const iepl::PolicyDocument& doc);

struct IntegrityReport {
  PolicyHash expected_hash;  // from the Genesis Lock
  PolicyHash observed_hash;  // recomputed from the in-memory policy
  bool intact = false;
  std::string checked_at;
};

json to_json(const IntegrityReport& r);

// Mismatch is a report outcome, never an error.
IntegrityReport check_integrity(const iepl::PolicyDocument& live_policy,
                                const genesis::GenesisLock& lock,
                                const std::string& checked_at = canonical::utc_now());

}  // namespace aegis::eva
