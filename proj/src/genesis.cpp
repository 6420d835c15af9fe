#include "aegis/genesis.hpp"

#include <unistd.h>

#include <fstream>
#include <random>

namespace aegis::genesis {

namespace {

std::vector<std::uint8_t> lock_payload(const HardwareIdentity& hw, const PolicyHash& policy_hash,
                                       const std::string& timestamp) {
  return crypto::tagged_payload(
      "aegis.genesis.v1",
      {std::span<const std::uint8_t>(hw.fingerprint.bytes),
       std::span<const std::uint8_t>(policy_hash.bytes), crypto::as_bytes(timestamp)});
}

std::string read_or_create_salt(const std::filesystem::path& state_dir) {
  auto salt_path = state_dir / "salt";
  if (std::filesystem::exists(salt_path)) {
    std::ifstream f(salt_path);
    std::string line;
    std::getline(f, line);
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    if (line.size() != 64) throw MalformedLock("salt file is corrupt: " + salt_path.string());
    return line;
  }
  std::random_device rd;
  std::array<std::uint8_t, 32> salt{};
  for (auto& b : salt) b = static_cast<std::uint8_t>(rd());
  std::filesystem::create_directories(state_dir);
  std::ofstream f(salt_path, std::ios::trunc);
  f << crypto::to_hex(salt) << "\n";
  return crypto::to_hex(salt);
}

}  // namespace

HardwareIdentity HardwareIdentity::from_fingerprint(const crypto::Digest& fp) {
  return HardwareIdentity{fp, fp.hex().substr(0, 8)};
}

HardwareIdentity local_hardware_identity(const std::filesystem::path& state_dir) {
  char hostname[256] = {0};
  gethostname(hostname, sizeof(hostname) - 1);
  std::string salt_hex = read_or_create_salt(state_dir);
  auto payload = crypto::tagged_payload("aegis.hwid.v1",
                                        {std::string_view(hostname), std::string_view(salt_hex)});
  return HardwareIdentity::from_fingerprint(crypto::sha3_256(payload));
}

json to_json(const GenesisLock& lock) {
  json j{{"auctor_public_key", lock.auctor_public_key.hex()},
         {"auctor_signature", crypto::to_hex(lock.auctor_signature)},
         {"declaration_timestamp", lock.declaration_timestamp},
         {"hardware",
          {{"fingerprint", lock.hardware.fingerprint.hex()}, {"site_id", lock.hardware.site_id}}},
         {"policy_hash", lock.policy_hash.hex()}};
  if (lock.redeclaration_of) j["redeclaration_of"] = lock.redeclaration_of->hex();
  if (lock.quorum_certificate) j["quorum_certificate"] = senatus::to_json(*lock.quorum_certificate);
  return j;
}

GenesisLock lock_from_json(const json& j) {
  GenesisLock lock;
  try {
    lock.auctor_public_key =
        crypto::VerifyKey::from_hex(j.at("auctor_public_key").get<std::string>());
    auto sig = crypto::from_hex(j.at("auctor_signature").get<std::string>());
    if (sig.size() != lock.auctor_signature.size())
      throw MalformedLock("auctor signature must be 64 bytes");
    std::copy(sig.begin(), sig.end(), lock.auctor_signature.begin());
    lock.declaration_timestamp = j.at("declaration_timestamp").get<std::string>();
    lock.hardware = HardwareIdentity{
        crypto::Digest::from_hex(j.at("hardware").at("fingerprint").get<std::string>()),
        j.at("hardware").at("site_id").get<std::string>()};
    lock.policy_hash = PolicyHash::from_hex(j.at("policy_hash").get<std::string>());
    if (j.contains("redeclaration_of"))
      lock.redeclaration_of = crypto::Digest::from_hex(j.at("redeclaration_of").get<std::string>());
    if (j.contains("quorum_certificate"))
      lock.quorum_certificate = senatus::certificate_from_json(j.at("quorum_certificate"));
  } catch (const json::exception& e) {
    throw MalformedLock(std::string("lock parse error: ") + e.what());
  } catch (const crypto::CryptoError& e) {
    throw MalformedLock(std::string("lock parse error: ") + e.what());
  }
  return lock;
}

std::string serialize(const GenesisLock& lock) { return canonical::dump(to_json(lock)); }

GenesisLock parse_lock(std::string_view canonical_bytes) {
  json j;
  try {
    j = json::parse(canonical_bytes);
  } catch (const json::exception& e) {
    throw MalformedLock(std::string("lock parse error: ") + e.what());
  }
  return lock_from_json(j);
}

crypto::Digest lock_digest(const GenesisLock& lock) { return crypto::sha3_256(serialize(lock)); }

GenesisLock declare_genesis(const HardwareIdentity& hw, const PolicyHash& policy_hash,
                            const crypto::SigningKey& auctor_key, const std::string& timestamp) {
  if (!auctor_key.valid()) throw SigningFailure("auctor signing key is empty");
  GenesisLock lock;
  lock.hardware = hw;
  lock.policy_hash = policy_hash;
  lock.declaration_timestamp = timestamp;
  lock.auctor_public_key = auctor_key.verify_key();
  try {
    lock.auctor_signature = auctor_key.sign(lock_payload(hw, policy_hash, timestamp));
  } catch (const crypto::CryptoError& e) {
    throw SigningFailure(e.what());
  }
  return lock;
}

VerifyResult verify_genesis(const GenesisLock& lock, const HardwareIdentity& current_hw,
                            const PolicyHash& current_policy_hash, const QuorumContext* quorum) {
  auto halt = [](std::string reason) {
    return VerifyResult{VerifyResult::Status::HALT, std::move(reason)};
  };

  if (!lock.auctor_public_key.valid() ||
      !lock.auctor_public_key.verify(
          lock_payload(lock.hardware, lock.policy_hash, lock.declaration_timestamp),
          lock.auctor_signature))
    return halt("InvalidSignature");
  if (lock.hardware.fingerprint != current_hw.fingerprint) return halt("FingerprintMismatch");
  if (lock.hardware.site_id != lock.hardware.fingerprint.hex().substr(0, 8))
    return halt("SiteIdMismatch");
  if (lock.policy_hash != current_policy_hash) return halt("PolicyHashMismatch");

  if (lock.redeclaration_of.has_value() != lock.quorum_certificate.has_value())
    return halt("MalformedRedeclaration");
  if (lock.redeclaration_of) {
    if (!quorum) return halt("QuorumUnverifiable");
    const auto& cert = *lock.quorum_certificate;
    if (cert.new_hash != lock.policy_hash) return halt("CertificateHashMismatch");
    if (quorum->prior_policy_hash && cert.base_hash != *quorum->prior_policy_hash)
      return halt("LineageMismatch");
    auto check = senatus::verify_certificate(cert, quorum->roster, quorum->quorum_q);
    if (!check.ok) return halt("QuorumInsufficient: " + check.reason);
  }
  return VerifyResult{VerifyResult::Status::VERIFIED, ""};
}

GenesisLock redeclare(const GenesisLock& prior, const PolicyHash& new_policy_hash,
                      const senatus::QuorumCertificate& cert, const crypto::SigningKey& auctor_key,
                      const QuorumContext& quorum, const std::string& timestamp) {
  if (cert.base_hash != prior.policy_hash)
    throw LineageMismatch("certificate base hash does not match the prior lock's policy hash");
  if (cert.new_hash != new_policy_hash)
    throw LineageMismatch("certificate does not certify the new policy hash");
  auto check = senatus::verify_certificate(cert, quorum.roster, quorum.quorum_q);
  if (!check.ok) throw QuorumInsufficient(check.reason);

  GenesisLock lock = declare_genesis(prior.hardware, new_policy_hash, auctor_key, timestamp);
  lock.redeclaration_of = lock_digest(prior);
  lock.quorum_certificate = cert;
  return lock;
}

}  // namespace aegis::genesis
