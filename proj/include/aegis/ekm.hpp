#pragma once

// Enforcement Kernel Module: the single publish gate. Every emission decision
// flows through Gate::publish(), which runs the integrity check, the EVA
// verdict, the risk bound, proof generation/verification, and the durable ILK
// append — in that order. Breach conditions (prohibited operation, integrity
// mismatch, proof failure) drive the gate into LOCKDOWN, an absorbing state
// exited only by a quorum-certified Genesis redeclaration.

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "aegis/eva.hpp"
#include "aegis/genesis.hpp"
#include "aegis/ilk.hpp"
#include "aegis/poc.hpp"

namespace aegis::ekm {

using json = canonical::json;

struct RedeclarationInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { OPERATIONAL, LOCKDOWN };

struct ShutdownCertificate {
  std::string breach_description;
  json evidence;  // triggering integrity report / failed-proof reference
  crypto::Digest sealed_log_head;
  iepl::PolicyHash policy_hash_at_breach;
  std::string issued_at;
  crypto::Signature unit_signature{};  // over all prior fields
  std::vector<std::string> broadcast_targets;
};

json to_json(const ShutdownCertificate& cert);
ShutdownCertificate certificate_from_json(const json& j);
bool verify_certificate(const ShutdownCertificate& cert, const crypto::VerifyKey& unit_key);

struct PublishOutcome {
  enum class Kind { COMMITTED, VETOED, LOCKDOWN };
  enum class VetoReason { NONCOMPLIANT, RISK_EXCEEDED, DEFERRED };

  Kind kind = Kind::VETOED;
  crypto::Digest chain_hash;  // COMMITTED: the new chain head
  std::string matched_rule;   // VETOED
  VetoReason veto_reason = VetoReason::NONCOMPLIANT;
  std::shared_ptr<const ShutdownCertificate> certificate;  // LOCKDOWN
};

std::string veto_reason_name(PublishOutcome::VetoReason r);
json to_json(const PublishOutcome& outcome);
PublishOutcome outcome_from_json(const json& j);

struct GateState {
  Mode mode = Mode::OPERATIONAL;
  std::uint64_t decisions_count = 0;
  std::optional<std::string> lockdown_reason;
  iepl::PolicyHash policy_hash;  // of the lock currently anchoring the gate
  crypto::Digest chain_head;
};

json to_json(const GateState& s);

struct GateConfig {
  genesis::HardwareIdentity hardware;  // needed to re-verify redeclared locks
  senatus::Roster roster;              // validator keys for certificate checks
  std::vector<std::string> broadcast_targets;
  // Durable delivery of shutdown broadcasts (wired to validator inboxes).
  std::function<void(const std::string& target, const json& message)> broadcast;
  eva::UncertaintyScorer scorer;
  std::function<std::string()> now = &canonical::utc_now;
  std::filesystem::path certificate_path;  // standing certificate file ("" = none)
  std::function<void(std::uint64_t epoch_index)> epoch_hook;
  // Fault-injection probe for crash tests: called with "pre_append",
  // "post_append", "pre_return" around the durable write.
  std::function<void(const char* stage, const ilk::ChainedLogEntry* entry)> stage_probe;
};

// Strictly serialized publisher: one logical writer, total order of chain
// hashes. State reads return snapshots and are safe from any thread.
class Gate {
 public:
  Gate(iepl::PolicyDocument policy, genesis::GenesisLock lock, crypto::SigningKey unit_key,
       std::shared_ptr<ilk::LogWriter> log, GateConfig config = {});

  // Total: never throws; every failure path is an outcome. In LOCKDOWN every
  // call returns the standing certificate.
  PublishOutcome publish(const eva::ActionProposal& action);

  // Idempotent in LOCKDOWN (returns the standing certificate). Seals the ILK
  // segment, appends the terminal record, broadcasts to all validators.
  ShutdownCertificate lockdown(const std::string& reason, json evidence);

  // Requires LOCKDOWN and a quorum-certified lock chaining to the current
  // one; opens a fresh ILK segment whose first record references the sealed
  // head. Throws RedeclarationInvalid — the gate stays locked.
  GateState resume_after_redeclaration(const genesis::GenesisLock& new_lock,
                                       iepl::PolicyDocument new_policy);

  // Amendment adoption while OPERATIONAL (same verification, no unseal).
  GateState adopt_redeclaration(const genesis::GenesisLock& new_lock,
                                iepl::PolicyDocument new_policy);

  GateState state() const;
  std::shared_ptr<const ShutdownCertificate> standing_certificate() const;

  // Runs one integrity check outside the publish path (periodic poller);
  // locks down on mismatch.
  eva::IntegrityReport check_integrity_now();

  // Governance records (amendment lifecycle, rotation): never COMMIT.
  crypto::Digest append_governance(const std::string& action_id, const std::string& category,
                                   const json& payload);

  iepl::PolicyDocument policy_snapshot() const;
  genesis::GenesisLock lock_snapshot() const;
  crypto::VerifyKey unit_verify_key() const { return unit_public_; }
  const ilk::LogWriter& log() const { return *log_; }

  // Experiment surface (tamper protocol): mutates the live in-memory policy
  // without going through the amendment path.
  void tamper_live_policy(const std::function<void(iepl::PolicyDocument&)>& mutate);

  struct TimingSample {
    double validate_ms = 0, prove_ms = 0, verify_ms = 0, append_ms = 0, total_ms = 0;
  };
  std::vector<TimingSample> drain_timings();

  // Set when a lockdown was triggered through the publish path: duration of
  // the failing proof-verification, i.e. the verification-latency metric.
  struct LockdownTelemetry {
    double verification_ms = 0;
    std::string detected_at;
  };
  std::optional<LockdownTelemetry> last_lockdown_telemetry() const;

 private:
  PublishOutcome locked_outcome() const;
  GateState state_unlocked() const;
  crypto::Digest append_governance_unlocked(const std::string& action_id,
                                            const std::string& category, const json& payload);
  ShutdownCertificate do_lockdown(const std::string& reason, json evidence,
                                  const std::string& action_id, const std::string& category);
  void verify_and_swap(const genesis::GenesisLock& new_lock, const iepl::PolicyDocument& new_policy,
                       const iepl::PolicyHash& new_hash);
  ilk::ChainedLogEntry base_entry(const std::string& action_id, const std::string& category) const;
  void maybe_fire_epoch_hook();

  mutable std::mutex mu_;
  iepl::PolicyDocument policy_;
  iepl::PolicyHash policy_hash_;  // cache of seal(policy_) as of adoption
  genesis::GenesisLock lock_;
  crypto::SigningKey unit_key_;
  crypto::VerifyKey unit_public_;
  std::shared_ptr<ilk::LogWriter> log_;
  GateConfig config_;
  Mode mode_ = Mode::OPERATIONAL;
  std::uint64_t decisions_count_ = 0;
  std::optional<std::string> lockdown_reason_;
  std::shared_ptr<const ShutdownCertificate> standing_certificate_;
  std::vector<TimingSample> timings_;
  std::optional<LockdownTelemetry> last_telemetry_;
};

}  // namespace aegis::ekm
