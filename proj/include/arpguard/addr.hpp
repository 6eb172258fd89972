#pragma once

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "arpguard/error.hpp"

namespace arpguard {

/// Ethernet hardware address. Text form is lowercase "aa:bb:cc:dd:ee:ff".
class MacAddr {
 public:
  using Octets = std::array<std::uint8_t, 6>;

  constexpr MacAddr() = default;
  constexpr explicit MacAddr(const Octets& octets) : octets_(octets) {}

  static MacAddr parse(std::string_view text) {
    if (text.size() != 17) throw ParseError("invalid MAC address '" + std::string(text) + "'");
    Octets out{};
    for (std::size_t i = 0; i < 6; ++i) {
      const std::size_t at = i * 3;
      if (i > 0 && text[at - 1] != ':') {
        throw ParseError("invalid MAC address '" + std::string(text) + "'");
      }
      const int hi = hex_digit(text[at]);
      const int lo = hex_digit(text[at + 1]);
      if (hi < 0 || lo < 0) throw ParseError("invalid MAC address '" + std::string(text) + "'");
      out[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return MacAddr(out);
  }

  static constexpr MacAddr broadcast() { return MacAddr(Octets{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}); }

  std::string to_string() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s(17, ':');
    for (std::size_t i = 0; i < 6; ++i) {
      s[i * 3] = kHex[octets_[i] >> 4];
      s[i * 3 + 1] = kHex[octets_[i] & 0x0f];
    }
    return s;
  }

  constexpr const Octets& octets() const { return octets_; }
  constexpr bool is_broadcast() const { return *this == broadcast(); }
  constexpr bool is_zero() const { return *this == MacAddr{}; }

  constexpr std::uint64_t to_u64() const {
    std::uint64_t v = 0;
    for (auto o : octets_) v = (v << 8) | o;
    return v;
  }

  constexpr auto operator<=>(const MacAddr&) const = default;

 private:
  static constexpr int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  }

  Octets octets_{};
};

/// IPv4 address. Text form is canonical dotted quad without leading zeros.
class IpAddr4 {
 public:
  using Octets = std::array<std::uint8_t, 4>;

  constexpr IpAddr4() = default;
  constexpr explicit IpAddr4(const Octets& octets) : octets_(octets) {}
  static constexpr IpAddr4 from_u32(std::uint32_t v) {
    return IpAddr4(Octets{static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                          static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)});
  }

  static IpAddr4 parse(std::string_view text) {
    Octets out{};
    std::size_t pos = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (i > 0) {
        if (pos >= text.size() || text[pos] != '.') {
          throw ParseError("invalid IPv4 address '" + std::string(text) + "'");
        }
        ++pos;
      }
      std::size_t end = pos;
      while (end < text.size() && text[end] >= '0' && text[end] <= '9') ++end;
      const std::size_t len = end - pos;
      if (len == 0 || len > 3 || (len > 1 && text[pos] == '0')) {
        throw ParseError("invalid IPv4 address '" + std::string(text) + "'");
      }
      unsigned value = 0;
      std::from_chars(text.data() + pos, text.data() + end, value);
      if (value > 255) throw ParseError("invalid IPv4 octet in '" + std::string(text) + "'");
      out[i] = static_cast<std::uint8_t>(value);
      pos = end;
    }
    if (pos != text.size()) throw ParseError("invalid IPv4 address '" + std::string(text) + "'");
    return IpAddr4(out);
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < 4; ++i) {
      if (i > 0) s += '.';
      s += std::to_string(octets_[i]);
    }
    return s;
  }

  constexpr const Octets& octets() const { return octets_; }
  constexpr std::uint32_t to_u32() const {
    return (std::uint32_t{octets_[0]} << 24) | (std::uint32_t{octets_[1]} << 16) |
           (std::uint32_t{octets_[2]} << 8) | std::uint32_t{octets_[3]};
  }

  constexpr auto operator<=>(const IpAddr4&) const = default;

 private:
  Octets octets_{};
};

}  // namespace arpguard

template <>
struct std::hash<arpguard::MacAddr> {
  std::size_t operator()(const arpguard::MacAddr& m) const noexcept {
    return std::hash<std::uint64_t>{}(m.to_u64());
  }
};

template <>
struct std::hash<arpguard::IpAddr4> {
  std::size_t operator()(const arpguard::IpAddr4& a) const noexcept {
    return std::hash<std::uint32_t>{}(a.to_u32());
  }
};
