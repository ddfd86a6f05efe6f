#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>
#include <type_traits>

#include "chronovae/tensor.hpp"

namespace chronovae {

/// 64-bit FNV-1a over raw bytes.
class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
    requires std::is_arithmetic_v<T>
  void add(T v) {
    add_bytes(&v, sizeof(v));
  }
  void add(std::string_view s) { add_bytes(s.data(), s.size()); }
  void add(const Matrix& m) {
    add(static_cast<std::int64_t>(m.rows()));
    add(static_cast<std::int64_t>(m.cols()));
    add_bytes(m.data(), static_cast<std::size_t>(m.size()) * sizeof(Scalar));
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace chronovae
