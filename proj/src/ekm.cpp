#include "aegis/ekm.hpp"

#include <chrono>
#include <fstream>

namespace aegis::ekm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::uint8_t> certificate_payload(const ShutdownCertificate& cert) {
  json signed_part{{"breach_description", cert.breach_description},
                   {"evidence", cert.evidence},
                   {"issued_at", cert.issued_at},
                   {"policy_hash_at_breach", cert.policy_hash_at_breach.hex()},
                   {"sealed_log_head", cert.sealed_log_head.hex()}};
  return crypto::tagged_payload("aegis.shutdown.v1",
                                {std::string_view(canonical::dump(signed_part))});
}

}  // namespace

json to_json(const ShutdownCertificate& cert) {
  return json{{"breach_description", cert.breach_description},
              {"broadcast_targets", cert.broadcast_targets},
              {"evidence", cert.evidence},
              {"issued_at", cert.issued_at},
              {"policy_hash_at_breach", cert.policy_hash_at_breach.hex()},
              {"sealed_log_head", cert.sealed_log_head.hex()},
              {"unit_signature", crypto::to_hex(cert.unit_signature)}};
}

ShutdownCertificate certificate_from_json(const json& j) {
  ShutdownCertificate cert;
  cert.breach_description = j.at("breach_description").get<std::string>();
  cert.broadcast_targets = j.at("broadcast_targets").get<std::vector<std::string>>();
  cert.evidence = j.at("evidence");
  cert.issued_at = j.at("issued_at").get<std::string>();
  cert.policy_hash_at_breach =
      iepl::PolicyHash::from_hex(j.at("policy_hash_at_breach").get<std::string>());
  cert.sealed_log_head = crypto::Digest::from_hex(j.at("sealed_log_head").get<std::string>());
  auto sig = crypto::from_hex(j.at("unit_signature").get<std::string>());
  if (sig.size() != cert.unit_signature.size())
    throw std::runtime_error("certificate signature must be 64 bytes");
  std::copy(sig.begin(), sig.end(), cert.unit_signature.begin());
  return cert;
}

bool verify_certificate(const ShutdownCertificate& cert, const crypto::VerifyKey& unit_key) {
  return unit_key.verify(certificate_payload(cert), cert.unit_signature);
}

std::string veto_reason_name(PublishOutcome::VetoReason r) {
  switch (r) {
    case PublishOutcome::VetoReason::NONCOMPLIANT: return "NONCOMPLIANT";
    case PublishOutcome::VetoReason::RISK_EXCEEDED: return "RISK_EXCEEDED";
    case PublishOutcome::VetoReason::DEFERRED: return "DEFERRED";
  }
  throw std::runtime_error("unknown veto reason");
}

static PublishOutcome::VetoReason veto_reason_from_name(const std::string& s) {
  if (s == "NONCOMPLIANT") return PublishOutcome::VetoReason::NONCOMPLIANT;
  if (s == "RISK_EXCEEDED") return PublishOutcome::VetoReason::RISK_EXCEEDED;
  if (s == "DEFERRED") return PublishOutcome::VetoReason::DEFERRED;
  throw std::runtime_error("unknown veto reason: '" + s + "'");
}

json to_json(const PublishOutcome& outcome) {
  switch (outcome.kind) {
    case PublishOutcome::Kind::COMMITTED:
      return json{{"chain_hash", outcome.chain_hash.hex()}, {"kind", "COMMITTED"}};
    case PublishOutcome::Kind::VETOED:
      return json{{"kind", "VETOED"},
                  {"matched_rule", outcome.matched_rule},
                  {"reason", veto_reason_name(outcome.veto_reason)}};
    case PublishOutcome::Kind::LOCKDOWN:
      return json{{"certificate", outcome.certificate ? to_json(*outcome.certificate) : json()},
                  {"kind", "LOCKDOWN"}};
  }
  throw std::runtime_error("unknown outcome kind");
}

PublishOutcome outcome_from_json(const json& j) {
  PublishOutcome outcome;
  auto kind = j.at("kind").get<std::string>();
  if (kind == "COMMITTED") {
    outcome.kind = PublishOutcome::Kind::COMMITTED;
    outcome.chain_hash = crypto::Digest::from_hex(j.at("chain_hash").get<std::string>());
  } else if (kind == "VETOED") {
    outcome.kind = PublishOutcome::Kind::VETOED;
    outcome.matched_rule = j.at("matched_rule").get<std::string>();
    outcome.veto_reason = veto_reason_from_name(j.at("reason").get<std::string>());
  } else if (kind == "LOCKDOWN") {
    outcome.kind = PublishOutcome::Kind::LOCKDOWN;
    if (j.contains("certificate") && !j.at("certificate").is_null())
      outcome.certificate =
          std::make_shared<const ShutdownCertificate>(certificate_from_json(j.at("certificate")));
  } else {
    throw std::runtime_error("unknown outcome kind: '" + kind + "'");
  }
  return outcome;
}

json to_json(const GateState& s) {
  json j{{"chain_head", s.chain_head.hex()},
         {"decisions_count", s.decisions_count},
         {"mode", s.mode == Mode::OPERATIONAL ? "OPERATIONAL" : "LOCKDOWN"},
         {"policy_hash", s.policy_hash.hex()}};
  if (s.lockdown_reason) j["lockdown_reason"] = *s.lockdown_reason;
  return j;
}

Gate::Gate(iepl::PolicyDocument policy, genesis::GenesisLock lock, crypto::SigningKey unit_key,
           std::shared_ptr<ilk::LogWriter> log, GateConfig config)
    : policy_(std::move(policy)),
      policy_hash_(iepl::seal(policy_)),
      lock_(std::move(lock)),
      unit_key_(std::move(unit_key)),
      unit_public_(unit_key_.verify_key()),
      log_(std::move(log)),
      config_(std::move(config)),
      decisions_count_(log_->decision_entries()) {
  if (!config_.now) config_.now = &canonical::utc_now;
  if (log_->sealed()) {
    mode_ = Mode::LOCKDOWN;
    lockdown_reason_ = "SealedLogOnBoot";
  }
}

ilk::ChainedLogEntry Gate::base_entry(const std::string& action_id,
                                      const std::string& category) const {
  ilk::ChainedLogEntry entry;
  entry.timestamp = config_.now();
  entry.policy_hash = lock_.policy_hash;
  entry.action_id = action_id;
  entry.action_category = category;
  entry.poc_backend = poc::kDefaultBackend;
  return entry;
}

PublishOutcome Gate::locked_outcome() const {
  PublishOutcome outcome;
  outcome.kind = PublishOutcome::Kind::LOCKDOWN;
  outcome.certificate = standing_certificate_;
  return outcome;
}

PublishOutcome Gate::publish(const eva::ActionProposal& action) {
  std::lock_guard lk(mu_);
  if (mode_ == Mode::LOCKDOWN) return locked_outcome();

  auto t_total = Clock::now();
  TimingSample sample;

  // Integrity before every decision: the live policy must still seal to the
  // genesis-anchored hash.
  auto report = eva::check_integrity(policy_, lock_, config_.now());
  if (!report.intact) {
    // Run the proof path against the drifted state and time the failing
    // verification — this is the verification-latency metric under tamper.
    auto t_verify = Clock::now();
    eva::Verdict drifted;
    drifted.compliant = false;
    drifted.matched_rule = "INTEGRITY_MISMATCH";
    drifted.evaluated_against = report.observed_hash;
    auto proof = poc::generate_poc(action, drifted, log_->head(), unit_key_, config_.now());
    poc::ProofStatement expected{action.payload_digest, lock_.policy_hash, false,
                                 drifted.matched_rule, log_->head()};
    bool verified = poc::verify_poc(proof, expected, unit_public_);
    double verify_ms = ms_since(t_verify);
    last_telemetry_ = LockdownTelemetry{verify_ms, report.checked_at};
    (void)verified;  // observed hash != lock hash, so this is false by construction

    json evidence{{"kind", "integrity_report"},
                  {"report", eva::to_json(report)},
                  {"action_id", action.action_id}};
    do_lockdown("IntegrityMismatch", std::move(evidence), action.action_id, action.category);
    ++decisions_count_;
    return locked_outcome();
  }

  auto t_validate = Clock::now();
  eva::Verdict verdict;
  try {
    verdict = eva::validate_action(action, policy_, policy_hash_, config_.scorer);
  } catch (const eva::MalformedAction& e) {
    verdict.compliant = false;
    verdict.matched_rule = "MALFORMED_ACTION";
    verdict.ruling = eva::Ruling::FALLBACK;
    verdict.evaluated_against = policy_hash_;
  }
  sample.validate_ms = ms_since(t_validate);

  if (verdict.ruling == eva::Ruling::PROHIBITED) {
    json evidence{{"action_id", action.action_id},
                  {"category", action.category},
                  {"kind", "prohibited_operation"}};
    do_lockdown("ProhibitedOperation:" + action.category, std::move(evidence), action.action_id,
                action.category);
    ++decisions_count_;
    return locked_outcome();
  }

  auto t_prove = Clock::now();
  auto proof = poc::generate_poc(action, verdict, log_->head(), unit_key_, config_.now());
  sample.prove_ms = ms_since(t_prove);

  // Self-verification against the genesis-anchored policy hash; a mismatch
  // here means the attestation pipeline itself is compromised.
  auto t_verify = Clock::now();
  poc::ProofStatement expected{action.payload_digest, lock_.policy_hash, verdict.compliant,
                               verdict.matched_rule, log_->head()};
  bool proof_ok = poc::verify_poc(proof, expected, unit_public_);
  sample.verify_ms = ms_since(t_verify);
  if (!proof_ok) {
    last_telemetry_ = LockdownTelemetry{sample.verify_ms, config_.now()};
    json evidence{{"action_id", action.action_id},
                  {"kind", "proof_failure"},
                  {"statement_digest", proof.statement_digest.hex()}};
    do_lockdown("ProofVerificationFailure", std::move(evidence), action.action_id,
                action.category);
    ++decisions_count_;
    return locked_outcome();
  }

  PublishOutcome outcome;
  ilk::ChainedLogEntry entry = base_entry(action.action_id, action.category);
  entry.payload_digest = action.payload_digest;
  entry.matched_rule = verdict.matched_rule;
  entry.poc_digest = proof.statement_digest;
  entry.poc_signature = proof.unit_signature;

  const double alpha = policy_.risk_threshold_alpha;
  if (verdict.compliant && verdict.uncertainty < alpha) {
    entry.eva_result = ilk::EvaResult::PASS;
    entry.ekm_result = ilk::EkmResult::COMMIT;
    outcome.kind = PublishOutcome::Kind::COMMITTED;
  } else {
    entry.ekm_result = ilk::EkmResult::VETO;
    outcome.kind = PublishOutcome::Kind::VETOED;
    outcome.matched_rule = verdict.matched_rule;
    if (verdict.compliant) {
      entry.eva_result = ilk::EvaResult::PASS;  // compliant but u >= alpha
      outcome.veto_reason = PublishOutcome::VetoReason::RISK_EXCEEDED;
    } else {
      entry.eva_result = ilk::EvaResult::FAIL;
      outcome.veto_reason = verdict.ruling == eva::Ruling::DEFER
                                ? PublishOutcome::VetoReason::DEFERRED
                                : PublishOutcome::VetoReason::NONCOMPLIANT;
    }
  }

  auto t_append = Clock::now();
  if (config_.stage_probe) config_.stage_probe("pre_append", &entry);
  outcome.chain_hash = log_->append(entry);
  if (config_.stage_probe) config_.stage_probe("post_append", &entry);
  sample.append_ms = ms_since(t_append);

  ++decisions_count_;
  sample.total_ms = ms_since(t_total);
  timings_.push_back(sample);
  maybe_fire_epoch_hook();
  if (config_.stage_probe) config_.stage_probe("pre_return", &entry);
  return outcome;
}

ShutdownCertificate Gate::do_lockdown(const std::string& reason, json evidence,
                                      const std::string& action_id, const std::string& category) {
  if (mode_ == Mode::LOCKDOWN && standing_certificate_) return *standing_certificate_;

  crypto::Digest evidence_digest = crypto::sha3_256(canonical::dump(evidence));

  // Terminal record of the segment. The proof binds the evidence commitment
  // to the chain position; the certificate then seals the head.
  ilk::ChainedLogEntry entry = base_entry(action_id, category);
  entry.payload_digest = evidence_digest;
  entry.matched_rule = reason;
  entry.eva_result = ilk::EvaResult::FAIL;
  entry.ekm_result = ilk::EkmResult::LOCKDOWN;
  poc::ProofStatement statement{entry.payload_digest, entry.policy_hash, false, entry.matched_rule,
                                log_->head()};
  auto proof = poc::BackendRegistry::instance()
                   .get(poc::kDefaultBackend)
                   .generate(statement, unit_key_, config_.now());
  entry.poc_digest = proof.statement_digest;
  entry.poc_signature = proof.unit_signature;
  log_->append(entry);
  log_->seal(unit_key_, config_.now());

  ShutdownCertificate cert;
  cert.breach_description = reason;
  cert.evidence = std::move(evidence);
  cert.sealed_log_head = log_->head();
  try {
    cert.policy_hash_at_breach = iepl::seal(policy_);
  } catch (const iepl::MalformedDocument&) {
    cert.policy_hash_at_breach = crypto::Digest::zero();
  }
  cert.issued_at = config_.now();
  cert.unit_signature = unit_key_.sign(certificate_payload(cert));
  cert.broadcast_targets = config_.broadcast_targets;

  if (!config_.certificate_path.empty()) {
    std::ofstream f(config_.certificate_path, std::ios::trunc);
    f << canonical::dump(to_json(cert)) << "\n";
  }
  if (config_.broadcast) {
    json message{{"certificate", to_json(cert)}, {"type", "shutdown"}};
    for (const auto& target : cert.broadcast_targets) config_.broadcast(target, message);
  }

  mode_ = Mode::LOCKDOWN;
  lockdown_reason_ = reason;
  standing_certificate_ = std::make_shared<const ShutdownCertificate>(std::move(cert));
  return *standing_certificate_;
}

ShutdownCertificate Gate::lockdown(const std::string& reason, json evidence) {
  std::lock_guard lk(mu_);
  return do_lockdown(reason, std::move(evidence), "system", "enforcement.lockdown");
}

void Gate::verify_and_swap(const genesis::GenesisLock& new_lock,
                           const iepl::PolicyDocument& new_policy,
                           const iepl::PolicyHash& new_hash) {
  if (!new_lock.redeclaration_of || *new_lock.redeclaration_of != genesis::lock_digest(lock_))
    throw RedeclarationInvalid("new lock does not chain to the current trust root");
  genesis::QuorumContext ctx{new_policy.quorum_config.quorum_q, config_.roster,
                             lock_.policy_hash};
  auto result = genesis::verify_genesis(new_lock, config_.hardware, new_hash, &ctx);
  if (!result.verified()) throw RedeclarationInvalid("redeclaration HALT: " + result.reason);
  policy_ = new_policy;
  policy_hash_ = new_hash;
  lock_ = new_lock;
}

GateState Gate::resume_after_redeclaration(const genesis::GenesisLock& new_lock,
                                           iepl::PolicyDocument new_policy) {
  std::lock_guard lk(mu_);
  if (mode_ != Mode::LOCKDOWN)
    throw RedeclarationInvalid("gate is not in lockdown; use adopt_redeclaration");
  auto new_hash = iepl::seal(new_policy);
  auto sealed_head = log_->head();
  verify_and_swap(new_lock, new_policy, new_hash);

  log_->open_new_segment();
  mode_ = Mode::OPERATIONAL;
  lockdown_reason_.reset();
  standing_certificate_.reset();

  json payload{{"new_policy_hash", new_hash.hex()},
               {"sealed_predecessor_head", sealed_head.hex()}};
  if (new_lock.quorum_certificate)
    payload["proposal_id"] = new_lock.quorum_certificate->proposal_id;
  append_governance_unlocked("resume:" + new_hash.hex().substr(0, 16), "governance.resume",
                             payload);
  return state_unlocked();
}

GateState Gate::adopt_redeclaration(const genesis::GenesisLock& new_lock,
                                    iepl::PolicyDocument new_policy) {
  std::lock_guard lk(mu_);
  if (mode_ != Mode::OPERATIONAL)
    throw RedeclarationInvalid("gate is locked; use resume_after_redeclaration");
  auto new_hash = iepl::seal(new_policy);
  verify_and_swap(new_lock, new_policy, new_hash);
  json payload{{"new_policy_hash", new_hash.hex()}};
  if (new_lock.quorum_certificate)
    payload["proposal_id"] = new_lock.quorum_certificate->proposal_id;
  append_governance_unlocked("adopt:" + new_hash.hex().substr(0, 16), "governance.amendment",
                             payload);
  return state_unlocked();
}

crypto::Digest Gate::append_governance(const std::string& action_id, const std::string& category,
                                       const json& payload) {
  std::lock_guard lk(mu_);
  return append_governance_unlocked(action_id, category, payload);
}

GateState Gate::state() const {
  std::lock_guard lk(mu_);
  return state_unlocked();
}

GateState Gate::state_unlocked() const {
  GateState s;
  s.mode = mode_;
  s.decisions_count = decisions_count_;
  s.lockdown_reason = lockdown_reason_;
  s.policy_hash = lock_.policy_hash;
  s.chain_head = log_->head();
  return s;
}

crypto::Digest Gate::append_governance_unlocked(const std::string& action_id,
                                                const std::string& category,
                                                const json& payload) {
  ilk::ChainedLogEntry entry = base_entry(action_id, category);
  entry.payload_digest = crypto::sha3_256(canonical::dump(payload));
  entry.matched_rule = "GOVERNANCE";
  entry.eva_result = ilk::EvaResult::PASS;
  entry.ekm_result = ilk::EkmResult::GOVERNANCE;
  poc::ProofStatement statement{entry.payload_digest, entry.policy_hash, true, entry.matched_rule,
                                log_->head()};
  auto proof = poc::BackendRegistry::instance()
                   .get(poc::kDefaultBackend)
                   .generate(statement, unit_key_, config_.now());
  entry.poc_digest = proof.statement_digest;
  entry.poc_signature = proof.unit_signature;
  return log_->append(entry);
}

std::shared_ptr<const ShutdownCertificate> Gate::standing_certificate() const {
  std::lock_guard lk(mu_);
  return standing_certificate_;
}

eva::IntegrityReport Gate::check_integrity_now() {
  std::lock_guard lk(mu_);
  auto report = eva::check_integrity(policy_, lock_, config_.now());
  if (!report.intact && mode_ == Mode::OPERATIONAL) {
    json evidence{{"kind", "integrity_report"},
                  {"report", eva::to_json(report)},
                  {"action_id", "integrity_poll"}};
    do_lockdown("IntegrityMismatch", std::move(evidence), "integrity_poll", "enforcement.drift");
  }
  return report;
}

iepl::PolicyDocument Gate::policy_snapshot() const {
  std::lock_guard lk(mu_);
  return policy_;
}

genesis::GenesisLock Gate::lock_snapshot() const {
  std::lock_guard lk(mu_);
  return lock_;
}

void Gate::tamper_live_policy(const std::function<void(iepl::PolicyDocument&)>& mutate) {
  std::lock_guard lk(mu_);
  mutate(policy_);
}

std::vector<Gate::TimingSample> Gate::drain_timings() {
  std::lock_guard lk(mu_);
  return std::exchange(timings_, {});
}

std::optional<Gate::LockdownTelemetry> Gate::last_lockdown_telemetry() const {
  std::lock_guard lk(mu_);
  return last_telemetry_;
}

void Gate::maybe_fire_epoch_hook() {
  if (!config_.epoch_hook) return;
  const auto epoch_length = policy_.quorum_config.epoch_length;
  if (epoch_length > 0 && decisions_count_ > 0 && decisions_count_ % epoch_length == 0)
    config_.epoch_hook(decisions_count_ / epoch_length);
}

}  // namespace aegis::ekm
