#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cropper {

// Incremental SHA-256 (OpenSSL-backed); hex digests key the replay store and
// the embedding cache.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(Sha256&&) noexcept;
  Sha256& operator=(Sha256&&) noexcept;

  Sha256& update(std::span<const std::byte> data);
  Sha256& update(const std::string& text);
  std::string hex();  // finalizes; the object must not be reused afterwards

  static std::string of(std::span<const std::byte> data);
  static std::string of(const std::string& text);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline std::span<const std::byte> as_bytes_view(const std::string& s) {
  return {reinterpret_cast<const std::byte*>(s.data()), s.size()};
}

inline std::span<const std::byte> as_bytes_view(const std::vector<unsigned char>& v) {
  return {reinterpret_cast<const std::byte*>(v.data()), v.size()};
}

}  // namespace cropper
