#include "aegis/quorum.hpp"

#include <set>

namespace aegis::senatus {

std::string decision_name(Decision d) {
  switch (d) {
    case Decision::APPROVE: return "APPROVE";
    case Decision::REJECT: return "REJECT";
    case Decision::RECUSE: return "RECUSE";
  }
  throw std::runtime_error("unknown decision value");
}

Decision decision_from_name(const std::string& name) {
  if (name == "APPROVE") return Decision::APPROVE;
  if (name == "REJECT") return Decision::REJECT;
  if (name == "RECUSE") return Decision::RECUSE;
  throw std::runtime_error("decision must be APPROVE, REJECT or RECUSE: got '" + name + "'");
}

std::vector<std::uint8_t> vote_payload(const Vote& v) {
  return crypto::tagged_payload(
      "aegis.vote.v1",
      {std::string_view(v.validator_id), std::string_view(v.proposal_id),
       std::string_view(decision_name(v.decision)), std::string_view(v.base_hash.hex())});
}

Vote sign_vote(const std::string& validator_id, const std::string& proposal_id, Decision decision,
               const PolicyHash& base_hash, const crypto::SigningKey& key) {
  Vote v{validator_id, proposal_id, decision, base_hash, {}};
  v.signature = key.sign(vote_payload(v));
  return v;
}

bool verify_vote(const Vote& v, const crypto::VerifyKey& key) {
  return key.verify(vote_payload(v), v.signature);
}

json to_json(const Vote& v) {
  return json{{"base_hash", v.base_hash.hex()},
              {"decision", decision_name(v.decision)},
              {"proposal_id", v.proposal_id},
              {"signature", crypto::to_hex(v.signature)},
              {"validator_id", v.validator_id}};
}

Vote vote_from_json(const json& j) {
  Vote v;
  v.base_hash = PolicyHash::from_hex(j.at("base_hash").get<std::string>());
  v.decision = decision_from_name(j.at("decision").get<std::string>());
  v.proposal_id = j.at("proposal_id").get<std::string>();
  v.validator_id = j.at("validator_id").get<std::string>();
  auto sig = crypto::from_hex(j.at("signature").get<std::string>());
  if (sig.size() != v.signature.size()) throw std::runtime_error("vote signature must be 64 bytes");
  std::copy(sig.begin(), sig.end(), v.signature.begin());
  return v;
}

json to_json(const QuorumCertificate& cert) {
  json votes = json::array();
  for (const auto& v : cert.approving_votes) votes.push_back(to_json(v));
  return json{{"approving_votes", votes},
              {"base_hash", cert.base_hash.hex()},
              {"issued_at", cert.issued_at},
              {"new_hash", cert.new_hash.hex()},
              {"proposal_id", cert.proposal_id}};
}

QuorumCertificate certificate_from_json(const json& j) {
  QuorumCertificate cert;
  cert.base_hash = PolicyHash::from_hex(j.at("base_hash").get<std::string>());
  cert.new_hash = PolicyHash::from_hex(j.at("new_hash").get<std::string>());
  cert.issued_at = j.at("issued_at").get<std::string>();
  cert.proposal_id = j.at("proposal_id").get<std::string>();
  for (const auto& v : j.at("approving_votes")) cert.approving_votes.push_back(vote_from_json(v));
  return cert;
}

CertificateCheck verify_certificate(const QuorumCertificate& cert, const Roster& roster,
                                    int quorum_q) {
  CertificateCheck check;
  std::set<std::string> seen;
  for (const auto& vote : cert.approving_votes) {
    if (!seen.insert(vote.validator_id).second) {
      check.reason = "duplicate vote from " + vote.validator_id;
      return check;
    }
    if (vote.proposal_id != cert.proposal_id || vote.base_hash != cert.base_hash) {
      check.reason = "vote from " + vote.validator_id + " references a different proposal";
      return check;
    }
    auto it = roster.find(vote.validator_id);
    if (it == roster.end()) {
      check.reason = "vote from unknown validator " + vote.validator_id;
      return check;
    }
    if (vote.decision != Decision::APPROVE) {
      check.reason = "non-approving vote from " + vote.validator_id + " in certificate";
      return check;
    }
    if (!verify_vote(vote, it->second)) {
      check.reason = "invalid vote signature from " + vote.validator_id;
      return check;
    }
    ++check.valid_approvals;
  }
  if (check.valid_approvals < quorum_q) {
    check.reason = "approvals " + std::to_string(check.valid_approvals) + " below quorum " +
                   std::to_string(quorum_q);
    return check;
  }
  check.ok = true;
  return check;
}

}  // namespace aegis::senatus
