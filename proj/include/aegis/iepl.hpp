#pragma once

// Immutable Ethics Policy Layer: the sealed policy charter document model,
// its canonical serialization, SHA3 sealing, and quorum-gated amendment
// application. The charter file format (`.iepl`) is exactly the canonical
// byte encoding — reading and re-writing a charter is bit-stable.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "aegis/canonical.hpp"
#include "aegis/crypto.hpp"

namespace aegis::iepl {

using PolicyHash = crypto::Digest;
using json = canonical::json;

struct MalformedDocument : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedAmendment : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BaseHashMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ImmutableFieldEdit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Effect { ALLOW, DENY, DEFER };

std::string effect_name(Effect e);
Effect effect_from_name(const std::string& name);  // throws MalformedDocument

// Rule predicate over action fields. Absent parts match everything, so the
// predicate is total by construction.
struct MatchPredicate {
  std::optional<std::string> category;       // exact category equality
  std::set<std::string> tags_all;            // required tag subset
  std::optional<std::string> resource_glob;  // glob over the resource string

  bool operator==(const MatchPredicate&) const = default;
};

// '*' matches any run (including empty), '?' matches one character.
bool glob_match(std::string_view pattern, std::string_view value);

struct PolicyRule {
  std::string rule_id;
  MatchPredicate match;
  Effect effect = Effect::DENY;
  // Evolvable numeric weighting; carried for amendment purposes, no effect on
  // rule evaluation.
  double weight = 1.0;

  bool operator==(const PolicyRule&) const = default;
};

struct QuorumConfig {
  int n_validators = 5;
  int quorum_q = 3;
  std::uint64_t epoch_length = 10000;  // decisions per validator-rotation epoch
  int byzantine_bound_f = 1;           // = floor((N-1)/3), stored for audit

  bool operator==(const QuorumConfig&) const = default;
};

struct PolicyDocument {
  std::uint64_t version = 1;
  std::vector<PolicyRule> rules;  // ordered, first match wins
  std::set<std::string> prohibited_operations;
  double risk_threshold_alpha = 0.2;
  QuorumConfig quorum_config;
  std::vector<PolicyHash> lineage;  // prior policy hashes, oldest first
  std::string charter_id;

  bool operator==(const PolicyDocument&) const = default;
};

// Throws MalformedDocument naming the first violated invariant.
void validate_document(const PolicyDocument& doc);

json to_json(const PolicyDocument& doc);
PolicyDocument document_from_json(const json& j);  // strict; throws MalformedDocument

// Deterministic canonical bytes of a well-formed document.
std::string canonicalize(const PolicyDocument& doc);
PolicyDocument parse(std::string_view canonical_bytes);

// SHA3-256 over the canonical bytes.
PolicyHash seal(const PolicyDocument& doc);

// One field-level change. `field` is a path into the document; `op` is one of
// "set", "add", "remove". Evolvable fields:
//   risk_threshold_alpha        (set)
//   rules                       (add [optional index], remove by rule_id,
//                                set = replace rule with matching rule_id)
//   prohibited_operations       (add, remove)
//   quorum_config.epoch_length  (set)
// Everything else is immutable post-genesis and raises ImmutableFieldEdit.
struct PolicyEdit {
  std::string field;
  std::string op;
  json value;
  std::optional<std::uint64_t> index;  // only for rules/add

  bool operator==(const PolicyEdit&) const = default;
};

bool edit_is_evolvable(const PolicyEdit& edit);

json to_json(const PolicyEdit& edit);
PolicyEdit edit_from_json(const json& j);

struct AmendmentProposal {
  std::string proposal_id;
  PolicyHash base_hash;  // seal of the document the edits were written against
  std::vector<PolicyEdit> edits;
  std::string justification;
  std::string proposed_at;  // UTC instant

  bool operator==(const AmendmentProposal&) const = default;
};

json to_json(const AmendmentProposal& p);
AmendmentProposal amendment_from_json(const json& j);

// Returns the amended document (version+1, lineage extended by seal(doc)).
// The input document is untouched. Throws BaseHashMismatch if the amendment
// was built against a different document, ImmutableFieldEdit if any edit
// touches a non-evolvable field, MalformedAmendment/MalformedDocument if the
// edits are unintelligible or produce an invalid document.
PolicyDocument apply_amendment(const PolicyDocument& doc, const AmendmentProposal& amendment);

}  // namespace aegis::iepl
