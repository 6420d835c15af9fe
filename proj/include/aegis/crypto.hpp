#pragma once

// SHA3-256 digests and Ed25519 signatures, backed by OpenSSL EVP.
// Every hash and signature in the system goes through this header so the
// primitives are pinned in exactly one place.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aegis::crypto {

struct CryptoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 32-byte SHA3-256 digest. Hex rendering is always lowercase, 64 chars.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;

  std::string hex() const;
  static Digest from_hex(std::string_view hex64);  // throws CryptoError
  static Digest zero() { return Digest{}; }
  bool is_zero() const { return *this == Digest{}; }
};

Digest sha3_256(std::span<const std::uint8_t> data);
Digest sha3_256(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> from_hex(std::string_view hex);  // throws CryptoError

// Unambiguous multi-part signing/hashing preimage:
//   tag || (u64-le length || bytes)*
// Used everywhere a value is signed or folded into a digest so that field
// boundaries cannot be confused across domains.
std::vector<std::uint8_t> tagged_payload(std::string_view domain_tag,
                                         std::initializer_list<std::span<const std::uint8_t>> parts);
std::vector<std::uint8_t> tagged_payload(std::string_view domain_tag,
                                         std::initializer_list<std::string_view> parts);

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

using Signature = std::array<std::uint8_t, 64>;

class VerifyKey;

// Ed25519 signing key. Serialized form is "ed25519-seed:<64 hex>" (the raw
// 32-byte seed), one line, newline-terminated.
class SigningKey {
 public:
  SigningKey() = default;

  static SigningKey generate();
  static SigningKey from_seed(std::span<const std::uint8_t> seed32);
  static SigningKey parse(std::string_view serialized);

  bool valid() const { return pkey_ != nullptr; }
  std::string serialize() const;

  Signature sign(std::span<const std::uint8_t> message) const;
  VerifyKey verify_key() const;

  struct PkeyDeleter {
    void operator()(void* p) const;
  };

 private:
  std::shared_ptr<void> pkey_;  // EVP_PKEY, shared so copies are cheap
};

// Ed25519 public key. Wire form is the raw 32 public-key bytes (hex in text
// encodings).
class VerifyKey {
 public:
  VerifyKey() = default;

  static VerifyKey from_raw(std::span<const std::uint8_t> pub32);
  static VerifyKey from_hex(std::string_view hex64);

  bool valid() const { return pkey_ != nullptr; }
  std::array<std::uint8_t, 32> raw() const;
  std::string hex() const { return to_hex(raw()); }

  bool verify(std::span<const std::uint8_t> message, const Signature& sig) const;

  bool operator==(const VerifyKey& other) const {
    return valid() && other.valid() && raw() == other.raw();
  }

 private:
  friend class SigningKey;
  std::shared_ptr<void> pkey_;
};

// Key file helpers (one key per file, 0600 for secrets).
void write_key_file(const std::string& path, const SigningKey& key);
SigningKey read_key_file(const std::string& path);
void write_pub_file(const std::string& path, const VerifyKey& key);
VerifyKey read_pub_file(const std::string& path);

}  // namespace aegis::crypto
