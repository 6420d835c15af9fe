#include "aegis/crypto.hpp"

#include <openssl/err.h>
#include <openssl/evp.h>

#include <cstring>
#include <fstream>
#include <sys/stat.h>

namespace aegis::crypto {

namespace {

[[noreturn]] void throw_openssl(const char* what) {
  char buf[256];
  ERR_error_string_n(ERR_get_error(), buf, sizeof(buf));
  throw CryptoError(std::string(what) + ": " + buf);
}

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

EVP_PKEY* pkey(const std::shared_ptr<void>& p) { return static_cast<EVP_PKEY*>(p.get()); }

}  // namespace

std::string to_hex(std::span<const std::uint8_t> data) {
  static const char* k = "0123456789abcdef";
  std::string out(data.size() * 2, '0');
  for (size_t i = 0; i < data.size(); ++i) {
    out[2 * i] = k[data[i] >> 4];
    out[2 * i + 1] = k[data[i] & 0xF];
  }
  return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw CryptoError("hex string has odd length");
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    int hi = hex_nibble(hex[2 * i]);
    int lo = hex_nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw CryptoError("invalid hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

std::string Digest::hex() const { return to_hex(bytes); }

Digest Digest::from_hex(std::string_view hex64) {
  if (hex64.size() != 64) throw CryptoError("digest hex must be 64 chars");
  auto raw = crypto::from_hex(hex64);
  Digest d;
  std::memcpy(d.bytes.data(), raw.data(), 32);
  return d;
}

Digest sha3_256(std::span<const std::uint8_t> data) {
  Digest d;
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw_openssl("EVP_MD_CTX_new");
  if (EVP_DigestInit_ex(ctx, EVP_sha3_256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, d.bytes.data(), &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw_openssl("sha3-256");
  }
  EVP_MD_CTX_free(ctx);
  if (len != 32) throw CryptoError("sha3-256 produced unexpected length");
  return d;
}

Digest sha3_256(std::string_view data) { return sha3_256(as_bytes(data)); }

std::vector<std::uint8_t> tagged_payload(std::string_view domain_tag,
                                         std::initializer_list<std::span<const std::uint8_t>> parts) {
  std::vector<std::uint8_t> out(domain_tag.begin(), domain_tag.end());
  for (const auto& part : parts) {
    std::uint64_t n = part.size();
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<std::uint8_t> tagged_payload(std::string_view domain_tag,
                                         std::initializer_list<std::string_view> parts) {
  std::vector<std::uint8_t> out(domain_tag.begin(), domain_tag.end());
  for (const auto& part : parts) {
    std::uint64_t n = part.size();
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void SigningKey::PkeyDeleter::operator()(void* p) const {
  EVP_PKEY_free(static_cast<EVP_PKEY*>(p));
}

SigningKey SigningKey::generate() {
  EVP_PKEY* key = nullptr;
  EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new_id(EVP_PKEY_ED25519, nullptr);
  if (!ctx) throw_openssl("EVP_PKEY_CTX_new_id");
  if (EVP_PKEY_keygen_init(ctx) != 1 || EVP_PKEY_keygen(ctx, &key) != 1) {
    EVP_PKEY_CTX_free(ctx);
    throw_openssl("ed25519 keygen");
  }
  EVP_PKEY_CTX_free(ctx);
  SigningKey out;
  out.pkey_ = std::shared_ptr<void>(key, PkeyDeleter{});
  return out;
}

SigningKey SigningKey::from_seed(std::span<const std::uint8_t> seed32) {
  if (seed32.size() != 32) throw CryptoError("ed25519 seed must be 32 bytes");
  EVP_PKEY* key =
      EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed32.data(), seed32.size());
  if (!key) throw_openssl("ed25519 from seed");
  SigningKey out;
  out.pkey_ = std::shared_ptr<void>(key, PkeyDeleter{});
  return out;
}

SigningKey SigningKey::parse(std::string_view serialized) {
  constexpr std::string_view prefix = "ed25519-seed:";
  while (!serialized.empty() && (serialized.back() == '\n' || serialized.back() == '\r'))
    serialized.remove_suffix(1);
  if (!serialized.starts_with(prefix)) throw CryptoError("unrecognized signing key format");
  auto seed = from_hex(serialized.substr(prefix.size()));
  return from_seed(seed);
}

std::string SigningKey::serialize() const {
  if (!valid()) throw CryptoError("serializing empty signing key");
  std::array<std::uint8_t, 32> seed{};
  size_t len = seed.size();
  if (EVP_PKEY_get_raw_private_key(pkey(pkey_), seed.data(), &len) != 1 || len != 32)
    throw_openssl("get raw private key");
  return "ed25519-seed:" + to_hex(seed) + "\n";
}

Signature SigningKey::sign(std::span<const std::uint8_t> message) const {
  if (!valid()) throw CryptoError("signing with empty key");
  Signature sig{};
  size_t len = sig.size();
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw_openssl("EVP_MD_CTX_new");
  if (EVP_DigestSignInit(ctx, nullptr, nullptr, nullptr, pkey(pkey_)) != 1 ||
      EVP_DigestSign(ctx, sig.data(), &len, message.data(), message.size()) != 1) {
    EVP_MD_CTX_free(ctx);
    throw_openssl("ed25519 sign");
  }
  EVP_MD_CTX_free(ctx);
  if (len != sig.size()) throw CryptoError("unexpected signature length");
  return sig;
}

VerifyKey SigningKey::verify_key() const {
  if (!valid()) throw CryptoError("empty signing key");
  std::array<std::uint8_t, 32> pub{};
  size_t len = pub.size();
  if (EVP_PKEY_get_raw_public_key(pkey(pkey_), pub.data(), &len) != 1 || len != 32)
    throw_openssl("get raw public key");
  return VerifyKey::from_raw(pub);
}

VerifyKey VerifyKey::from_raw(std::span<const std::uint8_t> pub32) {
  if (pub32.size() != 32) throw CryptoError("ed25519 public key must be 32 bytes");
  EVP_PKEY* key =
      EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pub32.data(), pub32.size());
  if (!key) throw_openssl("ed25519 public key");
  VerifyKey out;
  out.pkey_ = std::shared_ptr<void>(key, SigningKey::PkeyDeleter{});
  return out;
}

VerifyKey VerifyKey::from_hex(std::string_view hex64) {
  auto raw = crypto::from_hex(hex64);
  return from_raw(raw);
}

std::array<std::uint8_t, 32> VerifyKey::raw() const {
  if (!valid()) throw CryptoError("empty verify key");
  std::array<std::uint8_t, 32> pub{};
  size_t len = pub.size();
  if (EVP_PKEY_get_raw_public_key(pkey(pkey_), pub.data(), &len) != 1 || len != 32)
    throw_openssl("get raw public key");
  return pub;
}

bool VerifyKey::verify(std::span<const std::uint8_t> message, const Signature& sig) const {
  if (!valid()) return false;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) return false;
  bool ok = EVP_DigestVerifyInit(ctx, nullptr, nullptr, nullptr, pkey(pkey_)) == 1 &&
            EVP_DigestVerify(ctx, sig.data(), sig.size(), message.data(), message.size()) == 1;
  EVP_MD_CTX_free(ctx);
  ERR_clear_error();
  return ok;
}

void write_key_file(const std::string& path, const SigningKey& key) {
  {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw CryptoError("cannot write key file: " + path);
    f << key.serialize();
  }
  ::chmod(path.c_str(), 0600);
}

SigningKey read_key_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CryptoError("cannot read key file: " + path);
  std::string line;
  std::getline(f, line);
  return SigningKey::parse(line);
}

void write_pub_file(const std::string& path, const VerifyKey& key) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw CryptoError("cannot write pub file: " + path);
  f << key.hex() << "\n";
}

VerifyKey read_pub_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CryptoError("cannot read pub file: " + path);
  std::string line;
  std::getline(f, line);
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
  return VerifyKey::from_hex(line);
}

}  // namespace aegis::crypto
