#include "aegis/ilk.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace aegis::ilk {

std::string eva_result_name(EvaResult r) { return r == EvaResult::PASS ? "PASS" : "FAIL"; }

std::string ekm_result_name(EkmResult r) {
  switch (r) {
    case EkmResult::COMMIT: return "COMMIT";
    case EkmResult::VETO: return "VETO";
    case EkmResult::LOCKDOWN: return "LOCKDOWN";
    case EkmResult::GOVERNANCE: return "GOVERNANCE";
  }
  throw std::runtime_error("unknown ekm result");
}

EvaResult eva_result_from_name(const std::string& s) {
  if (s == "PASS") return EvaResult::PASS;
  if (s == "FAIL") return EvaResult::FAIL;
  throw std::runtime_error("eva result must be PASS or FAIL: got '" + s + "'");
}

EkmResult ekm_result_from_name(const std::string& s) {
  if (s == "COMMIT") return EkmResult::COMMIT;
  if (s == "VETO") return EkmResult::VETO;
  if (s == "LOCKDOWN") return EkmResult::LOCKDOWN;
  if (s == "GOVERNANCE") return EkmResult::GOVERNANCE;
  throw std::runtime_error("unknown ekm result: '" + s + "'");
}

json entry_core_json(const ChainedLogEntry& e) {
  return json{{"action_category", e.action_category},
              {"action_id", e.action_id},
              {"ekm_result", ekm_result_name(e.ekm_result)},
              {"eva_result", eva_result_name(e.eva_result)},
              {"matched_rule", e.matched_rule},
              {"payload_digest", e.payload_digest.hex()},
              {"poc_backend", e.poc_backend},
              {"poc_digest", e.poc_digest.hex()},
              {"poc_signature", crypto::to_hex(e.poc_signature)},
              {"policy_hash", e.policy_hash.hex()},
              {"sequence", e.sequence},
              {"site_id", e.site_id},
              {"timestamp", e.timestamp}};
}

crypto::Digest compute_chain_hash(const ChainedLogEntry& e) {
  std::string core = canonical::dump(entry_core_json(e));
  std::vector<std::uint8_t> preimage(e.prev_chain_hash.bytes.begin(),
                                     e.prev_chain_hash.bytes.end());
  preimage.insert(preimage.end(), core.begin(), core.end());
  return crypto::sha3_256(preimage);
}

json to_json(const ChainedLogEntry& e) {
  json j = entry_core_json(e);
  j["kind"] = "entry";
  j["prev_chain_hash"] = e.prev_chain_hash.hex();
  j["chain_hash"] = e.chain_hash.hex();
  return j;
}

namespace {

crypto::Signature signature_from_hex(const std::string& hex) {
  auto raw = crypto::from_hex(hex);
  crypto::Signature sig{};
  if (raw.size() != sig.size()) throw std::runtime_error("signature must be 64 bytes");
  std::copy(raw.begin(), raw.end(), sig.begin());
  return sig;
}

}  // namespace

ChainedLogEntry entry_from_json(const json& j) {
  ChainedLogEntry e;
  e.sequence = j.at("sequence").get<std::uint64_t>();
  e.timestamp = j.at("timestamp").get<std::string>();
  e.site_id = j.at("site_id").get<std::string>();
  e.policy_hash = iepl::PolicyHash::from_hex(j.at("policy_hash").get<std::string>());
  e.payload_digest = crypto::Digest::from_hex(j.at("payload_digest").get<std::string>());
  e.matched_rule = j.at("matched_rule").get<std::string>();
  e.poc_digest = crypto::Digest::from_hex(j.at("poc_digest").get<std::string>());
  e.poc_signature = signature_from_hex(j.at("poc_signature").get<std::string>());
  e.poc_backend = j.at("poc_backend").get<std::string>();
  e.action_id = j.at("action_id").get<std::string>();
  e.action_category = j.at("action_category").get<std::string>();
  e.eva_result = eva_result_from_name(j.at("eva_result").get<std::string>());
  e.ekm_result = ekm_result_from_name(j.at("ekm_result").get<std::string>());
  e.prev_chain_hash = crypto::Digest::from_hex(j.at("prev_chain_hash").get<std::string>());
  e.chain_hash = crypto::Digest::from_hex(j.at("chain_hash").get<std::string>());
  return e;
}

poc::ProofStatement statement_of(const ChainedLogEntry& e) {
  return poc::ProofStatement{e.payload_digest, e.policy_hash, e.eva_result == EvaResult::PASS,
                             e.matched_rule, e.prev_chain_hash};
}

namespace {

std::vector<std::uint8_t> seal_payload(const SealRecord& s) {
  std::array<std::uint8_t, 8> count_le{};
  for (int i = 0; i < 8; ++i) count_le[i] = static_cast<std::uint8_t>(s.entry_count >> (8 * i));
  return crypto::tagged_payload("aegis.ilk.seal.v1",
                                {std::span<const std::uint8_t>(s.sealed_head.bytes),
                                 std::span<const std::uint8_t>(count_le),
                                 crypto::as_bytes(s.sealed_at)});
}

}  // namespace

SealRecord make_seal(const crypto::Digest& head, std::uint64_t entry_count,
                     const std::string& sealed_at, const crypto::SigningKey& unit_key) {
  SealRecord s{head, sealed_at, entry_count, {}};
  s.unit_signature = unit_key.sign(seal_payload(s));
  return s;
}

bool verify_seal(const SealRecord& seal, const crypto::VerifyKey& unit_key) {
  return unit_key.verify(seal_payload(seal), seal.unit_signature);
}

json to_json(const SealRecord& s) {
  return json{{"entry_count", s.entry_count},
              {"kind", "seal"},
              {"sealed_at", s.sealed_at},
              {"sealed_head", s.sealed_head.hex()},
              {"unit_signature", crypto::to_hex(s.unit_signature)}};
}

SealRecord seal_from_json(const json& j) {
  SealRecord s;
  s.entry_count = j.at("entry_count").get<std::uint64_t>();
  s.sealed_at = j.at("sealed_at").get<std::string>();
  s.sealed_head = crypto::Digest::from_hex(j.at("sealed_head").get<std::string>());
  s.unit_signature = signature_from_hex(j.at("unit_signature").get<std::string>());
  return s;
}

LogWriter::LogWriter(std::filesystem::path path, std::string site_id, Options options)
    : path_(std::move(path)), site_id_(std::move(site_id)), options_(options) {
  if (std::filesystem::exists(path_)) {
    auto records = parse_log_file(path_);
    for (const auto& r : records) {
      if (r.kind == LogRecord::Kind::ENTRY) {
        head_ = r.entry.chain_hash;
        next_sequence_ = r.entry.sequence + 1;
        sealed_ = false;
        ++total_entries_;
        ++segment_entries_;
        if (r.entry.ekm_result != EkmResult::GOVERNANCE) ++decision_entries_;
      } else {
        sealed_ = true;
        segment_entries_ = 0;
      }
    }
  }
  file_ = std::fopen(path_.string().c_str(), "ab");
  if (!file_) throw std::runtime_error("cannot open log for append: " + path_.string());
}

LogWriter::~LogWriter() {
  if (file_) std::fclose(file_);
}

void LogWriter::write_line(const std::string& line) {
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() ||
      std::fwrite("\n", 1, 1, file_) != 1)
    throw std::runtime_error("log write failed: " + path_.string());
  if (std::fflush(file_) != 0) throw std::runtime_error("log flush failed: " + path_.string());
  if (options_.fsync) ::fsync(::fileno(file_));
}

crypto::Digest LogWriter::append(ChainedLogEntry entry) {
  if (sealed_) throw SegmentSealed("segment is sealed; appends are rejected");
  entry.sequence = next_sequence_;
  entry.site_id = site_id_;
  entry.prev_chain_hash = head_;
  entry.chain_hash = compute_chain_hash(entry);
  write_line(canonical::dump(to_json(entry)));
  head_ = entry.chain_hash;
  ++next_sequence_;
  ++total_entries_;
  ++segment_entries_;
  if (entry.ekm_result != EkmResult::GOVERNANCE) ++decision_entries_;
  return head_;
}

SealRecord LogWriter::seal(const crypto::SigningKey& unit_key, const std::string& sealed_at) {
  if (sealed_) throw SegmentSealed("segment is already sealed");
  SealRecord s = make_seal(head_, segment_entries_, sealed_at, unit_key);
  write_line(canonical::dump(to_json(s)));
  sealed_ = true;
  return s;
}

void LogWriter::open_new_segment() {
  if (!sealed_) throw SegmentSealed("cannot open a new segment before sealing the current one");
  sealed_ = false;
  next_sequence_ = 0;
  segment_entries_ = 0;
  // head_ stays: the successor's entry 0 chains to the sealed head.
}

std::vector<LogRecord> parse_log(std::istream& in) {
  std::vector<LogRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw MalformedLog(line_no, std::string("not valid JSON: ") + e.what());
    }
    LogRecord record;
    record.line_no = line_no;
    try {
      auto kind = j.at("kind").get<std::string>();
      if (kind == "entry") {
        record.kind = LogRecord::Kind::ENTRY;
        record.entry = entry_from_json(j);
      } else if (kind == "seal") {
        record.kind = LogRecord::Kind::SEAL;
        record.seal = seal_from_json(j);
      } else {
        throw MalformedLog(line_no, "unknown record kind: " + kind);
      }
    } catch (const MalformedLog&) {
      throw;
    } catch (const std::exception& e) {
      throw MalformedLog(line_no, e.what());
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<LogRecord> parse_log_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw MalformedLog(0, "cannot open log file: " + path.string());
  return parse_log(f);
}

ChainVerificationReport verify_chain(const std::vector<LogRecord>& records,
                                     const crypto::VerifyKey* unit_key) {
  ChainVerificationReport report;
  report.proofs_checked = unit_key != nullptr;
  crypto::Digest expect_prev = crypto::Digest::zero();
  std::uint64_t expect_seq = 0;

  auto broken = [&](std::uint64_t seq, std::size_t line, std::string detail) {
    report.intact = false;
    report.first_broken_sequence = seq;
    report.first_broken_line = line;
    report.detail = std::move(detail);
    return report;
  };

  for (const auto& record : records) {
    if (record.kind == LogRecord::Kind::ENTRY) {
      const auto& e = record.entry;
      if (e.sequence != expect_seq)
        return broken(expect_seq, record.line_no,
                      "sequence discontinuity: expected " + std::to_string(expect_seq) + ", got " +
                          std::to_string(e.sequence));
      if (e.prev_chain_hash != expect_prev)
        return broken(e.sequence, record.line_no, "prev_chain_hash does not match the chain head");
      if (compute_chain_hash(e) != e.chain_hash)
        return broken(e.sequence, record.line_no, "chain_hash does not recompute");
      if (unit_key) {
        try {
          const auto& backend = poc::BackendRegistry::instance().get(e.poc_backend);
          poc::ProofOfConduct proof{e.poc_digest, e.poc_signature, e.poc_backend, e.timestamp};
          if (!backend.verify(proof, statement_of(e), *unit_key))
            return broken(e.sequence, record.line_no, "proof of conduct does not verify");
        } catch (const poc::UnknownBackend& ex) {
          return broken(e.sequence, record.line_no, ex.what());
        }
      }
      expect_prev = e.chain_hash;
      ++expect_seq;
      ++report.entries_checked;
    } else {
      const auto& s = record.seal;
      if (s.sealed_head != expect_prev)
        return broken(expect_seq, record.line_no, "seal head does not match the chain head");
      if (s.entry_count != expect_seq)
        return broken(expect_seq, record.line_no, "seal entry_count does not match the segment");
      if (unit_key && !verify_seal(s, *unit_key))
        return broken(expect_seq, record.line_no, "seal signature does not verify");
      expect_seq = 0;  // successor segment restarts sequence; prev carries over
    }
  }
  report.intact = true;
  return report;
}

namespace {

std::string display_hex(const std::string& hex, bool pretty) {
  if (!pretty || hex.size() != 64) return hex;
  return hex.substr(0, 16) + "..." + hex.substr(56);
}

}  // namespace

std::string render_cscr_block(const ChainedLogEntry& e, bool pretty) {
  std::string out;
  out += "[" + e.timestamp + "] site=" + e.site_id + "\n";
  out += "IEPL_SHA3=" + display_hex(e.policy_hash.hex(), pretty) + "\n";
  out += "PoC_STARK=" + display_hex(e.poc_digest.hex(), pretty) + "\n";
  out += "ACTION=" + e.action_id + "; EVA=" + eva_result_name(e.eva_result) +
         "; EKM=" + ekm_result_name(e.ekm_result) + "\n";
  out += "CHAIN_HASH=" + display_hex(e.chain_hash.hex(), pretty) + "\n";
  return out;
}

std::string export_cscr(const std::vector<LogRecord>& records, std::uint64_t from, std::uint64_t to,
                        bool pretty) {
  std::string out;
  std::uint64_t index = 0;  // global entry index across segments
  bool any = false;
  for (const auto& record : records) {
    if (record.kind != LogRecord::Kind::ENTRY) continue;
    if (index >= from && index <= to) {
      if (any) out += "\n";
      out += render_cscr_block(record.entry, pretty);
      any = true;
    }
    ++index;
  }
  if (!any) throw RangeEmpty("no entries in range [" + std::to_string(from) + ", " +
                             std::to_string(to) + "]");
  return out;
}

std::vector<CscrBlock> parse_cscr(std::string_view text) {
  std::vector<CscrBlock> blocks;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> pending;
  std::size_t block_start = 1;

  auto flush = [&]() {
    if (pending.empty()) return;
    if (pending.size() != 5) throw MalformedLog(block_start, "CSCR block must have 5 lines");
    CscrBlock b;
    const std::string& l0 = pending[0];
    auto site_pos = l0.find("] site=");
    if (l0.empty() || l0.front() != '[' || site_pos == std::string::npos)
      throw MalformedLog(block_start, "bad CSCR header line");
    b.timestamp = l0.substr(1, site_pos - 1);
    b.site_id = l0.substr(site_pos + 7);
    auto field = [&](const std::string& l, const std::string& prefix,
                     std::size_t ln) -> std::string {
      if (!l.starts_with(prefix)) throw MalformedLog(ln, "expected '" + prefix + "'");
      return l.substr(prefix.size());
    };
    b.policy_hash_hex = field(pending[1], "IEPL_SHA3=", block_start + 1);
    b.poc_digest_hex = field(pending[2], "PoC_STARK=", block_start + 2);
    std::string action = field(pending[3], "ACTION=", block_start + 3);
    auto eva_pos = action.find("; EVA=");
    auto ekm_pos = action.find("; EKM=");
    if (eva_pos == std::string::npos || ekm_pos == std::string::npos || ekm_pos < eva_pos)
      throw MalformedLog(block_start + 3, "bad ACTION line");
    b.action_id = action.substr(0, eva_pos);
    b.eva = action.substr(eva_pos + 6, ekm_pos - (eva_pos + 6));
    b.ekm = action.substr(ekm_pos + 6);
    b.chain_hash_hex = field(pending[4], "CHAIN_HASH=", block_start + 4);
    blocks.push_back(std::move(b));
    pending.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      flush();
      block_start = line_no + 1;
    } else {
      if (pending.empty()) block_start = line_no;
      pending.push_back(line);
    }
  }
  flush();
  return blocks;
}

ChainVerificationReport verify_cscr_round_trip(const std::vector<CscrBlock>& blocks,
                                               const std::vector<LogRecord>& records,
                                               std::uint64_t from) {
  std::vector<const ChainedLogEntry*> entries;
  for (const auto& r : records)
    if (r.kind == LogRecord::Kind::ENTRY) entries.push_back(&r.entry);

  ChainVerificationReport report;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::uint64_t index = from + i;
    if (index >= entries.size()) {
      report.detail = "CSCR block " + std::to_string(i) + " has no structured counterpart";
      return report;
    }
    const auto& b = blocks[i];
    const auto& e = *entries[index];
    bool match = b.timestamp == e.timestamp && b.site_id == e.site_id &&
                 b.policy_hash_hex == e.policy_hash.hex() &&
                 b.poc_digest_hex == e.poc_digest.hex() && b.action_id == e.action_id &&
                 b.eva == eva_result_name(e.eva_result) && b.ekm == ekm_result_name(e.ekm_result) &&
                 b.chain_hash_hex == e.chain_hash.hex();
    if (!match) {
      report.first_broken_sequence = e.sequence;
      report.detail = "CSCR block " + std::to_string(i) + " does not match entry " +
                      std::to_string(index);
      return report;
    }
  }
  return verify_chain(records);
}

}  // namespace aegis::ilk
