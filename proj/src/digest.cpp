#include "cropper/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace cropper {

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
  Impl() {
    ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256 init failed");
  }
  ~Impl() {
    if (ctx) EVP_MD_CTX_free(ctx);
  }
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {}
Sha256::~Sha256() = default;
Sha256::Sha256(Sha256&&) noexcept = default;
Sha256& Sha256::operator=(Sha256&&) noexcept = default;

Sha256& Sha256::update(std::span<const std::byte> data) {
  if (EVP_DigestUpdate(impl_->ctx, data.data(), data.size()) != 1)
    throw std::runtime_error("sha256 update failed");
  return *this;
}

Sha256& Sha256::update(const std::string& text) { return update(as_bytes_view(text)); }

std::string Sha256::hex() {
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(impl_->ctx, out, &len) != 1)
    throw std::runtime_error("sha256 final failed");
  static const char* digits = "0123456789abcdef";
  std::string hexstr;
  hexstr.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    hexstr.push_back(digits[out[i] >> 4]);
    hexstr.push_back(digits[out[i] & 0xf]);
  }
  return hexstr;
}

std::string Sha256::of(std::span<const std::byte> data) {
  Sha256 h;
  h.update(data);
  return h.hex();
}

std::string Sha256::of(const std::string& text) { return of(as_bytes_view(text)); }

}  // namespace cropper
