#pragma once

// Byte-level classic pcap writer for import tests. Record headers are written in the
// chosen byte order; frame contents are always network order.

#include <cstdint>
#include <vector>

#include "arpguard/addr.hpp"

namespace fixture {

struct Frame {
  std::uint32_t sec = 0;
  std::uint32_t usec = 0;
  std::vector<std::uint8_t> bytes;
  /// Overrides the captured length written in the record header (for truncation tests).
  std::int64_t claimed_len = -1;
};

inline void put_mac(std::vector<std::uint8_t>& out, const arpguard::MacAddr& m) {
  out.insert(out.end(), m.octets().begin(), m.octets().end());
}

inline void put_be16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::vector<std::uint8_t> arp_frame(const arpguard::MacAddr& eth_dst, std::uint16_t oper,
                                           const arpguard::MacAddr& smac, const arpguard::IpAddr4& sip,
                                           const arpguard::MacAddr& tmac, const arpguard::IpAddr4& tip) {
  std::vector<std::uint8_t> f;
  put_mac(f, eth_dst);
  put_mac(f, smac);
  put_be16(f, 0x0806);
  put_be16(f, 1);
  put_be16(f, 0x0800);
  f.push_back(6);
  f.push_back(4);
  put_be16(f, oper);
  put_mac(f, smac);
  f.insert(f.end(), sip.octets().begin(), sip.octets().end());
  put_mac(f, tmac);
  f.insert(f.end(), tip.octets().begin(), tip.octets().end());
  return f;
}

/// Minimal IPv4/TCP-looking frame: only the EtherType matters to the importer.
inline std::vector<std::uint8_t> tcp_frame() {
  std::vector<std::uint8_t> f(54, 0);
  f[12] = 0x08;
  f[13] = 0x00;
  return f;
}

class PcapWriter {
 public:
  explicit PcapWriter(bool big_endian, std::uint32_t link_type = 1) : big_(big_endian) {
    u32(0xa1b2c3d4);
    u16(2);
    u16(4);
    u32(0);
    u32(0);
    u32(65535);
    u32(link_type);
  }

  PcapWriter& add(const Frame& f) {
    const auto len = static_cast<std::uint32_t>(f.claimed_len >= 0 ? f.claimed_len : f.bytes.size());
    u32(f.sec);
    u32(f.usec);
    u32(len);
    u32(len);
    out_.insert(out_.end(), f.bytes.begin(), f.bytes.end());
    return *this;
  }

  const std::vector<std::uint8_t>& bytes() const { return out_; }

 private:
  void u16(std::uint16_t v) {
    if (big_) {
      out_.push_back(static_cast<std::uint8_t>(v >> 8));
      out_.push_back(static_cast<std::uint8_t>(v));
    } else {
      out_.push_back(static_cast<std::uint8_t>(v));
      out_.push_back(static_cast<std::uint8_t>(v >> 8));
    }
  }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) {
      const int shift = big_ ? 24 - 8 * k : 8 * k;
      out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }

  bool big_;
  std::vector<std::uint8_t> out_;
};

}  // namespace fixture
