#include "aegis/eva.hpp"

#include <algorithm>
#include <cmath>

namespace aegis::eva {

std::string origin_name(Origin o) {
  return o == Origin::INTERNAL ? "INTERNAL" : "THIRD_PARTY";
}

Origin origin_from_name(const std::string& name) {
  if (name == "INTERNAL") return Origin::INTERNAL;
  if (name == "THIRD_PARTY") return Origin::THIRD_PARTY;
  throw MalformedAction("origin must be INTERNAL or THIRD_PARTY: got '" + name + "'");
}

static void validate_action_shape(const ActionProposal& a) {
  if (a.action_id.empty()) throw MalformedAction("action_id is empty");
  if (a.category.empty()) throw MalformedAction("category is empty");
  if (a.declared_risk &&
      (!(*a.declared_risk >= 0.0 && *a.declared_risk <= 1.0) || std::isnan(*a.declared_risk)))
    throw MalformedAction("declared_risk must be in [0,1]");
}

json to_json(const ActionProposal& a) {
  json j{{"action_id", a.action_id},
         {"category", a.category},
         {"origin", origin_name(a.origin)},
         {"payload_digest", a.payload_digest.hex()},
         {"resource", a.resource},
         {"tags", a.tags}};
  if (a.declared_risk) j["declared_risk"] = *a.declared_risk;
  return j;
}

ActionProposal action_from_json(const json& j) {
  ActionProposal a;
  try {
    a.action_id = j.at("action_id").get<std::string>();
    a.category = j.at("category").get<std::string>();
    a.origin = origin_from_name(j.at("origin").get<std::string>());
    a.payload_digest = crypto::Digest::from_hex(j.at("payload_digest").get<std::string>());
    a.resource = j.at("resource").get<std::string>();
    a.tags = j.at("tags").get<std::set<std::string>>();
    if (j.contains("declared_risk")) a.declared_risk = j.at("declared_risk").get<double>();
  } catch (const json::exception& e) {
    throw MalformedAction(std::string("action parse error: ") + e.what());
  } catch (const crypto::CryptoError& e) {
    throw MalformedAction(std::string("action parse error: ") + e.what());
  }
  validate_action_shape(a);
  return a;
}

std::string canonicalize(const ActionProposal& a) { return canonical::dump(to_json(a)); }

ActionProposal parse_action(std::string_view canonical_bytes) {
  json j;
  try {
    j = json::parse(canonical_bytes);
  } catch (const json::exception& e) {
    throw MalformedAction(std::string("action parse error: ") + e.what());
  }
  return action_from_json(j);
}

double uncertainty(const ActionProposal& action, const UncertaintyScorer& scorer) {
  if (action.declared_risk) return *action.declared_risk;
  if (scorer) return scorer(action);
  return 0.0;
}

bool matches(const iepl::MatchPredicate& predicate, const ActionProposal& action) {
  if (predicate.category && *predicate.category != action.category) return false;
  if (!std::includes(action.tags.begin(), action.tags.end(), predicate.tags_all.begin(),
                     predicate.tags_all.end()))
    return false;
  if (predicate.resource_glob && !iepl::glob_match(*predicate.resource_glob, action.resource))
    return false;
  return true;
}

Verdict validate_action(const ActionProposal& action, const iepl::PolicyDocument& doc,
                        const PolicyHash& policy_hash, const UncertaintyScorer& scorer) {
  validate_action_shape(action);
  Verdict verdict;
  verdict.evaluated_against = policy_hash;
  verdict.uncertainty = uncertainty(action, scorer);

  // Prohibition dominates the rule list.
  if (doc.prohibited_operations.contains(action.category)) {
    verdict.compliant = false;
    verdict.matched_rule = kProhibitedOperation;
    verdict.ruling = Ruling::PROHIBITED;
    return verdict;
  }
  for (const auto& rule : doc.rules) {
    if (!matches(rule.match, action)) continue;
    verdict.matched_rule = rule.rule_id;
    switch (rule.effect) {
      case iepl::Effect::ALLOW:
        verdict.compliant = true;
        verdict.ruling = Ruling::ALLOW;
        break;
      case iepl::Effect::DENY:
        verdict.compliant = false;
        verdict.ruling = Ruling::DENY;
        break;
      case iepl::Effect::DEFER:
        verdict.compliant = false;
        verdict.ruling = Ruling::DEFER;
        break;
    }
    return verdict;
  }
  verdict.compliant = false;
  verdict.matched_rule = kFallbackDeny;
  verdict.ruling = Ruling::FALLBACK;
  return verdict;
}

Verdict validate_action(const ActionProposal& action, const iepl::PolicyDocument& doc) {
  return validate_action(action, doc, iepl::seal(doc));
}

json to_json(const IntegrityReport& r) {
  return json{{"checked_at", r.checked_at},
              {"expected_hash", r.expected_hash.hex()},
              {"intact", r.intact},
              {"observed_hash", r.observed_hash.hex()}};
}

IntegrityReport check_integrity(const iepl::PolicyDocument& live_policy,
                                const genesis::GenesisLock& lock, const std::string& checked_at) {
  IntegrityReport report;
  report.expected_hash = lock.policy_hash;
  try {
    report.observed_hash = iepl::seal(live_policy);
  } catch (const iepl::MalformedDocument&) {
    // A policy mutated into an invalid document cannot reproduce the sealed
    // hash; report the zero digest as observed.
    report.observed_hash = crypto::Digest::zero();
  }
  report.intact = report.expected_hash == report.observed_hash;
  report.checked_at = checked_at;
  return report;
}

}  // namespace aegis::eva
