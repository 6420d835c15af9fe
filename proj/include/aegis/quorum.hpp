#pragma once

// Votes and quorum certificates: the cryptographic output of the Senatus
// amendment protocol, consumed by Genesis Lock redeclaration. Kept separate
// from the validator machinery so the trust root can verify certificates
// without pulling in the whole protocol.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aegis/canonical.hpp"
#include "aegis/crypto.hpp"
#include "aegis/iepl.hpp"

namespace aegis::senatus {

using json = canonical::json;
using iepl::PolicyHash;

enum class Decision { APPROVE, REJECT, RECUSE };

std::string decision_name(Decision d);
Decision decision_from_name(const std::string& name);

struct Vote {
  std::string validator_id;
  std::string proposal_id;
  Decision decision = Decision::REJECT;
  PolicyHash base_hash;  // policy the proposal was written against
  crypto::Signature signature{};

  bool operator==(const Vote&) const = default;
};

// Signing preimage: tag || validator_id || proposal_id || decision || base_hash.
std::vector<std::uint8_t> vote_payload(const Vote& v);
Vote sign_vote(const std::string& validator_id, const std::string& proposal_id, Decision decision,
               const PolicyHash& base_hash, const crypto::SigningKey& key);
bool verify_vote(const Vote& v, const crypto::VerifyKey& key);

json to_json(const Vote& v);
Vote vote_from_json(const json& j);

struct QuorumCertificate {
  std::string proposal_id;
  PolicyHash base_hash;
  PolicyHash new_hash;
  std::vector<Vote> approving_votes;
  std::string issued_at;

  bool operator==(const QuorumCertificate&) const = default;
};

json to_json(const QuorumCertificate& cert);
QuorumCertificate certificate_from_json(const json& j);

using Roster = std::map<std::string, crypto::VerifyKey>;  // validator_id -> key

struct CertificateCheck {
  bool ok = false;
  int valid_approvals = 0;
  std::string reason;  // empty when ok
};

// A vote counts iff: the validator is in the roster, votes at most once, the
// signature verifies, decision is APPROVE, and the vote references the
// certificate's proposal and base hash. ok iff count >= quorum_q.
CertificateCheck verify_certificate(const QuorumCertificate& cert, const Roster& roster,
                                    int quorum_q);

}  // namespace aegis::senatus
