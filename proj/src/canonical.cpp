#include "aegis/canonical.hpp"

#include <ctime>

namespace aegis::canonical {

std::string format_utc(std::chrono::system_clock::time_point tp) {
  std::time_t tt = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string utc_now() { return format_utc(std::chrono::system_clock::now()); }

}  // namespace aegis::canonical
