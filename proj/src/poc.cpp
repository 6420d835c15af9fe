#include "aegis/poc.hpp"

namespace aegis::poc {

crypto::Digest statement_digest(const ProofStatement& s) {
  const std::uint8_t verdict_byte = s.verdict_bit ? 1 : 0;
  auto payload = crypto::tagged_payload(
      "aegis.poc.attest.v1",
      {std::span<const std::uint8_t>(s.payload_digest.bytes),
       std::span<const std::uint8_t>(s.policy_hash.bytes),
       std::span<const std::uint8_t>(&verdict_byte, 1), crypto::as_bytes(s.matched_rule),
       std::span<const std::uint8_t>(s.prev_chain_hash.bytes)});
  return crypto::sha3_256(payload);
}

namespace {

class AttestBackend final : public ProofBackend {
 public:
  std::string id() const override { return kDefaultBackend; }

  ProofOfConduct generate(const ProofStatement& statement, const crypto::SigningKey& key,
                          const std::string& created_at) const override {
    ProofOfConduct proof;
    proof.statement_digest = poc::statement_digest(statement);
    try {
      proof.unit_signature = key.sign(proof.statement_digest.bytes);
    } catch (const crypto::CryptoError& e) {
      throw SigningFailure(e.what());
    }
    proof.backend_id = id();
    proof.created_at = created_at;
    return proof;
  }

  bool verify(const ProofOfConduct& proof, const ProofStatement& expected,
              const crypto::VerifyKey& key) const override {
    if (proof.statement_digest != poc::statement_digest(expected)) return false;
    return key.verify(proof.statement_digest.bytes, proof.unit_signature);
  }
};

}  // namespace

BackendRegistry::BackendRegistry() { register_backend(std::make_unique<AttestBackend>()); }

BackendRegistry& BackendRegistry::instance() {
  static BackendRegistry registry;
  return registry;
}

void BackendRegistry::register_backend(std::unique_ptr<ProofBackend> backend) {
  auto id = backend->id();
  backends_[id] = std::move(backend);
}

const ProofBackend& BackendRegistry::get(const std::string& backend_id) const {
  auto it = backends_.find(backend_id);
  if (it == backends_.end()) throw UnknownBackend("no proof backend registered as '" + backend_id + "'");
  return *it->second;
}

bool BackendRegistry::has(const std::string& backend_id) const {
  return backends_.contains(backend_id);
}

ProofOfConduct generate_poc(const eva::ActionProposal& action, const eva::Verdict& verdict,
                            const crypto::Digest& prev_chain_hash,
                            const crypto::SigningKey& unit_key, const std::string& created_at) {
  ProofStatement statement{action.payload_digest, verdict.evaluated_against, verdict.compliant,
                           verdict.matched_rule, prev_chain_hash};
  return BackendRegistry::instance().get(kDefaultBackend).generate(statement, unit_key, created_at);
}

bool verify_poc(const ProofOfConduct& proof, const ProofStatement& expected_inputs,
                const crypto::VerifyKey& unit_key) {
  return BackendRegistry::instance().get(proof.backend_id).verify(proof, expected_inputs, unit_key);
}

}  // namespace aegis::poc
