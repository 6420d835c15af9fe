#pragma once

// Immutable Logging Kernel: append-only, hash-chained, tamper-evident record
// of every decision — the source of truth behind the Cryptographically Sealed
// Constitutional Record (CSCR) export.
//
// Chaining model
//   chain_hash(e) = SHA3-256( prev_chain_hash_raw32 || canonical-JSON of the
//                             entry core )
// where the entry core is every field except prev_chain_hash and chain_hash.
// Entry 0 of the first segment uses 32 zero bytes as prev; a sealed segment's
// successor starts at sequence 0 with prev = the sealed head, giving one
// continuous chain across lockdown/resume boundaries.
//
// Storage: one canonical-JSON record per line in ilk.log ("kind":"entry" or
// "kind":"seal"). The five-line CSCR blocks are a derived view.

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "aegis/canonical.hpp"
#include "aegis/crypto.hpp"
#include "aegis/iepl.hpp"
#include "aegis/poc.hpp"

namespace aegis::ilk {

using json = canonical::json;

struct SegmentSealed : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RangeEmpty : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedLog : std::runtime_error {
  MalformedLog(std::size_t line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
  std::size_t line;
};

enum class EvaResult { PASS, FAIL };
// COMMIT/VETO/LOCKDOWN mark publish decisions; GOVERNANCE marks amendment,
// rotation and resumption records.
enum class EkmResult { COMMIT, VETO, LOCKDOWN, GOVERNANCE };

std::string eva_result_name(EvaResult r);
std::string ekm_result_name(EkmResult r);
EvaResult eva_result_from_name(const std::string& s);
EkmResult ekm_result_from_name(const std::string& s);

struct ChainedLogEntry {
  std::uint64_t sequence = 0;  // per segment, starting at 0
  std::string timestamp;       // ISO-8601, Z suffix
  std::string site_id;         // 8 hex chars
  iepl::PolicyHash policy_hash;
  crypto::Digest payload_digest;  // statement payload commitment
  std::string matched_rule;
  crypto::Digest poc_digest;  // the proof backend's statement digest
  crypto::Signature poc_signature{};
  std::string poc_backend;
  std::string action_id;
  std::string action_category;
  EvaResult eva_result = EvaResult::FAIL;
  EkmResult ekm_result = EkmResult::VETO;
  crypto::Digest prev_chain_hash;
  crypto::Digest chain_hash;

  bool operator==(const ChainedLogEntry&) const = default;
};

// Canonical JSON of the hashed fields (everything except prev/chain hash).
json entry_core_json(const ChainedLogEntry& e);
crypto::Digest compute_chain_hash(const ChainedLogEntry& e);

json to_json(const ChainedLogEntry& e);
ChainedLogEntry entry_from_json(const json& j);

// The per-entry proof statement, reconstructible offline from the entry.
poc::ProofStatement statement_of(const ChainedLogEntry& e);

struct SealRecord {
  crypto::Digest sealed_head;
  std::string sealed_at;
  std::uint64_t entry_count = 0;  // entries in the sealed segment
  crypto::Signature unit_signature{};

  bool operator==(const SealRecord&) const = default;
};

SealRecord make_seal(const crypto::Digest& head, std::uint64_t entry_count,
                     const std::string& sealed_at, const crypto::SigningKey& unit_key);
bool verify_seal(const SealRecord& seal, const crypto::VerifyKey& unit_key);

json to_json(const SealRecord& s);
SealRecord seal_from_json(const json& j);

struct LogWriterOptions {
  bool fsync = false;  // flush-to-kernel always happens; fsync is extra
};

// Single-writer durable appender. Restores head/sequence/seal state from an
// existing file on open, so the chain continues across process restarts.
class LogWriter {
 public:
  using Options = LogWriterOptions;

  LogWriter(std::filesystem::path path, std::string site_id, Options options = {});
  ~LogWriter();

  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  // Fills sequence/prev/chain hash, persists durably, returns the new head.
  // The entry must arrive with every non-chain field already set.
  crypto::Digest append(ChainedLogEntry entry);

  // Freezes this segment; further appends raise SegmentSealed.
  SealRecord seal(const crypto::SigningKey& unit_key, const std::string& sealed_at);

  // Begins the successor segment (sequence resets; prev stays = sealed head).
  void open_new_segment();

  crypto::Digest head() const { return head_; }
  std::uint64_t next_sequence() const { return next_sequence_; }
  bool sealed() const { return sealed_; }
  std::uint64_t total_entries() const { return total_entries_; }
  std::uint64_t decision_entries() const { return decision_entries_; }
  const std::filesystem::path& path() const { return path_; }
  const std::string& site_id() const { return site_id_; }

 private:
  void write_line(const std::string& line);

  std::filesystem::path path_;
  std::string site_id_;
  Options options_;
  FILE* file_ = nullptr;
  crypto::Digest head_;  // zero digest before the first entry
  std::uint64_t next_sequence_ = 0;
  std::uint64_t total_entries_ = 0;
  std::uint64_t decision_entries_ = 0;
  std::uint64_t segment_entries_ = 0;
  bool sealed_ = false;
};

// A parsed log stream: entries and seals in file order.
struct LogRecord {
  enum class Kind { ENTRY, SEAL } kind = Kind::ENTRY;
  ChainedLogEntry entry;
  SealRecord seal;
  std::size_t line_no = 0;
};

std::vector<LogRecord> parse_log(std::istream& in);        // throws MalformedLog
std::vector<LogRecord> parse_log_file(const std::filesystem::path& path);

struct ChainVerificationReport {
  bool intact = false;
  std::optional<std::uint64_t> first_broken_sequence;  // entry sequence at first break
  std::optional<std::size_t> first_broken_line;
  std::string detail;
  std::uint64_t entries_checked = 0;
  bool proofs_checked = false;
};

// Recomputes every chain hash (and, when a unit key is supplied, every PoC
// statement digest + signature and every seal signature). Reports the first
// break. Needs no live state — this is the external auditor path.
ChainVerificationReport verify_chain(const std::vector<LogRecord>& records,
                                     const crypto::VerifyKey* unit_key = nullptr);

// ---- CSCR export ----------------------------------------------------------
// One five-line block per entry:
//   [<timestamp>] site=<site_id>
//   IEPL_SHA3=<64 hex>
//   PoC_STARK=<64 hex>
//   ACTION=<action_id>; EVA=<PASS|FAIL>; EKM=<COMMIT|VETO|LOCKDOWN|GOVERNANCE>
//   CHAIN_HASH=<64 hex>
// Blocks are separated by one blank line. `pretty` renders hashes in the
// paper's truncated display form (first16...last8) and is not parseable.

std::string render_cscr_block(const ChainedLogEntry& e, bool pretty = false);
std::string export_cscr(const std::vector<LogRecord>& records, std::uint64_t from,
                        std::uint64_t to, bool pretty = false);  // throws RangeEmpty

struct CscrBlock {
  std::string timestamp;
  std::string site_id;
  std::string policy_hash_hex;
  std::string poc_digest_hex;
  std::string action_id;
  std::string eva;
  std::string ekm;
  std::string chain_hash_hex;
};

std::vector<CscrBlock> parse_cscr(std::string_view text);  // throws MalformedLog

// Round-trip check: every block matches its structured entry 1:1 and the
// structured chain verifies. Returns the verification report (with detail set
// to the first block mismatch, if any).
ChainVerificationReport verify_cscr_round_trip(const std::vector<CscrBlock>& blocks,
                                               const std::vector<LogRecord>& records,
                                               std::uint64_t from);

}  // namespace aegis::ilk
