#pragma once

// Proof of Conduct: a non-interactive attestation that one decision was
// evaluated against one sealed policy at one chain position. The proof
// backend is pluggable; the default "attest-v1" backend is a
// commitment-plus-signature attestation. It makes no zero-knowledge claim —
// a real ZK prover can be registered under a different backend_id.

#include <memory>
#include <string>

#include "aegis/crypto.hpp"
#include "aegis/eva.hpp"

namespace aegis::poc {

struct SigningFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownBackend : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kDefaultBackend = "attest-v1";

// The statement a proof binds: what was decided, under which policy, at which
// chain position. Verifiable from digests and public keys alone — emission
// content and policy internals are never needed.
struct ProofStatement {
  crypto::Digest payload_digest;
  iepl::PolicyHash policy_hash;
  bool verdict_bit = false;
  std::string matched_rule;
  crypto::Digest prev_chain_hash;
};

crypto::Digest statement_digest(const ProofStatement& s);

struct ProofOfConduct {
  crypto::Digest statement_digest;
  crypto::Signature unit_signature{};  // by the unit's runtime key
  std::string backend_id = kDefaultBackend;
  std::string created_at;
};

class ProofBackend {
 public:
  virtual ~ProofBackend() = default;
  virtual std::string id() const = 0;
  virtual ProofOfConduct generate(const ProofStatement& statement, const crypto::SigningKey& key,
                                  const std::string& created_at) const = 0;
  virtual bool verify(const ProofOfConduct& proof, const ProofStatement& expected,
                      const crypto::VerifyKey& key) const = 0;
};

// Process-wide backend registry; "attest-v1" is pre-registered.
class BackendRegistry {
 public:
  static BackendRegistry& instance();
  void register_backend(std::unique_ptr<ProofBackend> backend);
  const ProofBackend& get(const std::string& backend_id) const;  // throws UnknownBackend
  bool has(const std::string& backend_id) const;

 private:
  BackendRegistry();
  std::map<std::string, std::unique_ptr<ProofBackend>> backends_;
};

ProofOfConduct generate_poc(const eva::ActionProposal& action, const eva::Verdict& verdict,
                            const crypto::Digest& prev_chain_hash,
                            const crypto::SigningKey& unit_key,
                            const std::string& created_at = canonical::utc_now());

// True iff the statement digest recomputes from expected_inputs and the
// signature verifies under the unit key. Throws UnknownBackend for an
// unregistered backend_id.
bool verify_poc(const ProofOfConduct& proof, const ProofStatement& expected_inputs,
                const crypto::VerifyKey& unit_key);

}  // namespace aegis::poc
