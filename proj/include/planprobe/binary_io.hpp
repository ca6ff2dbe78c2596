#ifndef PLANPROBE_BINARY_IO_HPP
#define PLANPROBE_BINARY_IO_HPP

// Little-endian encode/decode helpers shared by the activation container and
// the probe model format.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "planprobe/error.hpp"

namespace planprobe::binary {

template <typename T>
T byteswap_if_needed(T value) {
  if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

template <typename T>
  requires std::is_arithmetic_v<T>
void put(std::string& out, T value) {
  value = byteswap_if_needed(value);
  const auto* p = reinterpret_cast<const char*>(&value);
  out.append(p, sizeof(T));
}

/// u32 byte length followed by the raw UTF-8 bytes.
inline void put_string(std::string& out, std::string_view text) {
  if (text.size() > UINT32_MAX) fail(ErrorKind::kValidation, "string longer than 4 GiB");
  put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.append(text);
}

inline void put_floats(std::string& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  } else {
    for (float v : values) put(out, v);
  }
}

inline void get_floats(std::span<const std::byte> bytes, std::span<float> out) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), bytes.data(), out.size_bytes());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) {
      float v;
      std::memcpy(&v, bytes.data() + 4 * i, 4);
      out[i] = byteswap_if_needed(v);
    }
  }
}

/// Bounds-checked cursor over a byte buffer. Offsets in error messages are
/// absolute file offsets (base + position).
class Cursor {
 public:
  Cursor(std::span<const std::byte> bytes, std::uint64_t base_offset = 0)
      : bytes_(bytes), base_(base_offset) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    require(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return byteswap_if_needed(value);
  }

  std::string get_string() {
    const auto length = get<std::uint32_t>();
    require(length);
    std::string text(reinterpret_cast<const char*>(bytes_.data() + pos_), length);
    pos_ += length;
    return text;
  }

  std::span<const std::byte> take(std::size_t n) {
    require(n);
    auto view = bytes_.subspan(pos_, n);
    pos_ += n;
    return view;
  }

  std::size_t position() const { return pos_; }
  std::uint64_t absolute() const { return base_ + pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void require(std::size_t n) const {
    if (n > bytes_.size() - pos_) {
      fail(ErrorKind::kCorruption, "unexpected end of data at byte offset " + std::to_string(base_ + pos_) +
                                       " (need " + std::to_string(n) + " bytes)");
    }
  }

  std::span<const std::byte> bytes_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
};

}  // namespace planprobe::binary

#endif  // PLANPROBE_BINARY_IO_HPP
