#pragma once

// Canonical text encoding shared by every serialized artifact (.iepl charters,
// genesis.lock, ilk.log lines, wire messages). Every hash in the system is
// computed over bytes produced here, so the rules are pinned once:
//   - JSON, object keys sorted by code point (nlohmann::json default ordering)
//   - no insignificant whitespace
//   - UTF-8
//   - numbers in minimal decimal form (shortest round-trip for doubles)
//   - array order preserved
// Two semantically equal values yield identical bytes.

#include <chrono>
#include <cstdint>
#include <string>

#include <json.hpp>

namespace aegis::canonical {

using json = nlohmann::json;

// Canonical byte rendering of a JSON value.
inline std::string dump(const json& value) { return value.dump(); }

// UTC instants are rendered as ISO-8601 with second precision and 'Z' suffix,
// e.g. "2025-06-09T03:00:51Z" — the timestamp form used in CSCR records.
std::string format_utc(std::chrono::system_clock::time_point tp);
std::string utc_now();

// Clock indirection so deterministic tests (golden files) can pin timestamps.
using NowFn = std::chrono::system_clock::time_point (*)();
inline std::chrono::system_clock::time_point system_now() {
  return std::chrono::system_clock::now();
}

}  // namespace aegis::canonical
