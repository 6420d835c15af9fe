#pragma once

// Genesis Lock: the trust root fusing hardware identity, the sealed policy
// hash, and the founding authority's (Auctor) signature. Verification is a
// one-way gate — any failed check halts execution; nothing transitions HALT
// back to VERIFIED except a fresh valid lock.

#include <filesystem>
#include <optional>
#include <string>

#include "aegis/crypto.hpp"
#include "aegis/iepl.hpp"
#include "aegis/quorum.hpp"

namespace aegis::genesis {

using iepl::PolicyHash;
using json = canonical::json;

struct SigningFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct QuorumInsufficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LineageMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedLock : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HardwareIdentity {
  crypto::Digest fingerprint;
  std::string site_id;  // first 8 hex chars of fingerprint

  static HardwareIdentity from_fingerprint(const crypto::Digest& fp);
  bool operator==(const HardwareIdentity&) const = default;
};

// Digest over (hostname || persisted random salt). The salt file lives in the
// state directory; deleting or altering it changes the fingerprint and the
// trust root stops verifying on this host.
HardwareIdentity local_hardware_identity(const std::filesystem::path& state_dir);

struct GenesisLock {
  HardwareIdentity hardware;
  PolicyHash policy_hash;
  crypto::VerifyKey auctor_public_key;
  crypto::Signature auctor_signature{};  // over (fingerprint || policy_hash || timestamp)
  std::string declaration_timestamp;     // UTC instant, part of the signed payload
  std::optional<crypto::Digest> redeclaration_of;  // digest of the prior lock
  std::optional<senatus::QuorumCertificate> quorum_certificate;  // present iff redeclared
};

json to_json(const GenesisLock& lock);
GenesisLock lock_from_json(const json& j);  // throws MalformedLock
std::string serialize(const GenesisLock& lock);
GenesisLock parse_lock(std::string_view canonical_bytes);

// Digest of the canonical lock bytes; what redeclaration_of points at.
crypto::Digest lock_digest(const GenesisLock& lock);

GenesisLock declare_genesis(const HardwareIdentity& hw, const PolicyHash& policy_hash,
                            const crypto::SigningKey& auctor_key,
                            const std::string& timestamp = canonical::utc_now());

// What a verifier needs to check a redeclared lock's quorum certificate.
struct QuorumContext {
  int quorum_q = 3;
  senatus::Roster roster;
  // When the verifier knows the predecessor's policy hash, the certificate's
  // base hash is checked against it as well.
  std::optional<PolicyHash> prior_policy_hash;
};

struct VerifyResult {
  enum class Status { VERIFIED, HALT } status = Status::HALT;
  std::string reason;  // names the first failed check; empty when VERIFIED

  bool verified() const { return status == Status::VERIFIED; }
};

// Total: every failure maps to HALT(reason). Runs at every boot. Checks, in
// order: signature, fingerprint, policy hash, redeclaration shape, quorum
// certificate (requires quorum context when the lock is a redeclaration).
VerifyResult verify_genesis(const GenesisLock& lock, const HardwareIdentity& current_hw,
                            const PolicyHash& current_policy_hash,
                            const QuorumContext* quorum = nullptr);

// Builds the successor lock after a passed amendment. cert must certify
// new_policy_hash on top of prior.policy_hash with >= q valid approvals.
GenesisLock redeclare(const GenesisLock& prior, const PolicyHash& new_policy_hash,
                      const senatus::QuorumCertificate& cert, const crypto::SigningKey& auctor_key,
                      const QuorumContext& quorum,
                      const std::string& timestamp = canonical::utc_now());

}  // namespace aegis::genesis
