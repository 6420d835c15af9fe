#pragma once

// Senatus: the quorum amendment protocol. Five validator agents (an N-of-M
// standby roster rotated each epoch) independently evaluate amendment
// proposals; an absolute q-of-N approval threshold issues a quorum
// certificate, which drives IEPL resealing and Genesis redeclaration.
// Validators are in-process sequential agents communicating over durable
// inbox directories (simulated network, injectable behavior for fault tests).

#include <filesystem>
#include <vector>

#include "aegis/ekm.hpp"
#include "aegis/quorum.hpp"

namespace aegis::senatus {

struct StalePool : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DuplicateVote : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RosterTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Test-configurable behavior. HONEST follows the constitutional checks;
// Byzantine scripts vote arbitrarily or sign badly; CRASHED never votes.
enum class Behavior {
  HONEST,
  BYZANTINE_APPROVE,
  BYZANTINE_REJECT,
  BYZANTINE_FLIP,    // opposite of the honest verdict
  BYZANTINE_BADSIG,  // honest decision, corrupted signature
  CRASHED,
};

std::string behavior_name(Behavior b);
Behavior behavior_from_name(const std::string& name);

// The rule subset a validator checks; defaults to the full amendment rules.
struct ConstitutionalParams {
  bool check_evolvable_only = true;
  bool check_base_hash = true;
  bool check_result_valid = true;
  bool check_prohibited_retained = true;  // reject removals from prohibited_operations
};

struct ValidatorAgent {
  std::string validator_id;
  crypto::SigningKey key;
  Behavior behavior = Behavior::HONEST;
  ConstitutionalParams constitutional_params;
};

// The honest constitutional evaluation, exposed for oracle tests.
Decision honest_decision(const std::string& validator_id, const iepl::AmendmentProposal& proposal,
                         const iepl::PolicyDocument& current_doc);

// Votes per the validator's behavior; throws StalePool when the validator is
// not in the active pool. CRASHED validators return no vote.
std::optional<Vote> evaluate_proposal(const ValidatorAgent& validator,
                                      const iepl::AmendmentProposal& proposal,
                                      const iepl::PolicyDocument& current_doc,
                                      const std::vector<std::string>& active_pool);

struct TallyOutcome {
  bool passed = false;
  std::optional<QuorumCertificate> certificate;  // set when passed
  int approvals = 0;  // valid APPROVE votes counted toward quorum
  int rejects = 0;
  int recusals = 0;
  int discarded = 0;  // invalid signatures / mismatched references
  std::string reason; // on rejection: counts vs threshold
};

// Absolute threshold: passage needs >= q valid APPROVE votes regardless of
// recusals. Invalid-signature votes are discarded before counting; duplicate
// votes from one validator raise DuplicateVote.
TallyOutcome tally(const std::vector<Vote>& votes, const iepl::QuorumConfig& config,
                   const Roster& roster, const iepl::PolicyHash& new_hash,
                   const std::string& issued_at = canonical::utc_now());

// apply_amendment -> seal -> redeclare, all-or-nothing: any failure leaves
// the inputs untouched and propagates, so the system reverts to its last
// validated state by construction.
struct PassageResult {
  iepl::PolicyDocument new_document;
  genesis::GenesisLock new_lock;
};

PassageResult execute_passage(const QuorumCertificate& cert,
                              const iepl::AmendmentProposal& proposal,
                              const iepl::PolicyDocument& current_doc,
                              const genesis::GenesisLock& lock,
                              const crypto::SigningKey& auctor_key,
                              const genesis::QuorumContext& quorum);

// Passage against a live gate: swaps the policy/lock (resuming from lockdown
// when necessary) and writes the governance records.
PassageResult execute_passage_on_gate(ekm::Gate& gate, const QuorumCertificate& cert,
                                      const iepl::AmendmentProposal& proposal,
                                      const crypto::SigningKey& auctor_key);

// ---- epoch rotation --------------------------------------------------------

struct ValidatorPool {
  std::vector<std::string> roster_ids;  // standby roster (>= N), sorted
  std::vector<std::string> active;      // current N members
  std::uint64_t epoch_index = 0;
  std::uint64_t rotation_seed = 0;
};

json to_json(const ValidatorPool& pool);
ValidatorPool pool_from_json(const json& j);

// Deterministic seeded schedule: the active set for an epoch is a function of
// (rotation_seed, epoch_index, roster). Throws RosterTooSmall.
std::vector<std::string> rotation_for_epoch(const std::vector<std::string>& roster_ids,
                                            int n_validators, std::uint64_t rotation_seed,
                                            std::uint64_t epoch_index);

// decisions_count must sit on an epoch boundary (multiple of epoch_length).
ValidatorPool rotate_epoch(const ValidatorPool& pool, std::uint64_t decisions_count,
                           int n_validators, std::uint64_t epoch_length);

// ---- durable inbox (simulated network) --------------------------------------

// One JSON message per file, sequence-ordered, atomic create via tmp+rename.
// Delivery is at-least-once; consumers deduplicate by content identifiers.
class InboxDir {
 public:
  explicit InboxDir(std::filesystem::path dir);

  void post(const json& message);
  std::vector<json> drain();             // read and remove, in order
  std::vector<json> peek() const;        // read without removing
  std::size_t pending() const;

 private:
  std::vector<std::filesystem::path> ordered_files() const;
  std::filesystem::path dir_;
};

}  // namespace aegis::senatus
