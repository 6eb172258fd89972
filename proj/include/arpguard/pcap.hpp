#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "arpguard/error.hpp"
#include "arpguard/trace.hpp"

namespace arpguard {

inline constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
inline constexpr std::uint32_t kPcapMagicSwapped = 0xd4c3b2a1;
inline constexpr std::uint32_t kLinkTypeEthernet = 1;
inline constexpr std::uint16_t kEtherTypeArp = 0x0806;

struct PcapImport {
  Trace trace;
  std::size_t frames = 0;
  /// Frames that were not Ethernet/ARP (or ARP with non-Ethernet/IPv4 addressing).
  std::size_t skipped = 0;
  /// Records or ARP payloads cut short; skipped with a warning.
  std::size_t truncated = 0;
};

namespace detail {

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, bool swapped) : bytes_(bytes), swapped_(swapped) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return swapped_ ? byteswap32(v) : v;
  }
  std::uint16_t u16() {
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return swapped_ ? static_cast<std::uint16_t>((v >> 8) | (v << 8)) : v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  static constexpr std::uint32_t byteswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  bool swapped_;
};

inline std::uint16_t be16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

inline MacAddr mac_at(std::span<const std::uint8_t> b, std::size_t at) {
  MacAddr::Octets o{};
  for (std::size_t i = 0; i < 6; ++i) o[i] = b[at + i];
  return MacAddr(o);
}

inline IpAddr4 ip_at(std::span<const std::uint8_t> b, std::size_t at) {
  return IpAddr4(IpAddr4::Octets{b[at], b[at + 1], b[at + 2], b[at + 3]});
}

}  // namespace detail

/// Decodes a classic pcap capture (either byte order, Ethernet link type).
/// Node ids are synthesized as "mac:<addr>"; Ethernet-broadcast frames get the "*" destination.
inline PcapImport import_pcap(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kGlobalHeader = 24;
  constexpr std::size_t kRecordHeader = 16;
  constexpr std::size_t kEthHeader = 14;
  constexpr std::size_t kArpBody = 28;

  if (bytes.size() < kGlobalHeader) throw ParseError("pcap: file too short for global header");
  const std::uint32_t magic_le = std::uint32_t{bytes[0]} | (std::uint32_t{bytes[1]} << 8) |
                                 (std::uint32_t{bytes[2]} << 16) | (std::uint32_t{bytes[3]} << 24);
  bool swapped = false;
  if (magic_le == kPcapMagic) {
    swapped = false;
  } else if (magic_le == kPcapMagicSwapped) {
    swapped = true;
  } else {
    throw ParseError("pcap: bad magic number");
  }

  detail::ByteReader rd(bytes, swapped);
  rd.u32();  // magic
  rd.u16();  // version major
  rd.u16();  // version minor
  rd.u32();  // thiszone
  rd.u32();  // sigfigs
  rd.u32();  // snaplen
  const std::uint32_t network = rd.u32();
  if (network != kLinkTypeEthernet) {
    throw ParseError("pcap: unsupported link type " + std::to_string(network));
  }

  PcapImport result;
  std::vector<ArpEvent> events;
  std::int64_t first_us = -1;
  while (rd.remaining() > 0) {
    if (rd.remaining() < kRecordHeader) {
      ++result.truncated;
      break;
    }
    const std::int64_t sec = rd.u32();
    const std::int64_t usec = rd.u32();
    const std::uint32_t incl_len = rd.u32();
    rd.u32();  // orig_len
    if (incl_len > rd.remaining()) {
      ++result.truncated;
      break;
    }
    const auto frame = rd.take(incl_len);
    ++result.frames;
    const std::int64_t ts_us = sec * 1'000'000 + usec;
    if (first_us < 0) first_us = ts_us;

    if (frame.size() < kEthHeader) {
      ++result.truncated;
      continue;
    }
    if (detail::be16(frame, 12) != kEtherTypeArp) {
      ++result.skipped;
      continue;
    }
    if (frame.size() < kEthHeader + kArpBody) {
      ++result.truncated;
      continue;
    }
    const auto arp = frame.subspan(kEthHeader);
    const std::uint16_t htype = detail::be16(arp, 0);
    const std::uint16_t ptype = detail::be16(arp, 2);
    const std::uint16_t oper = detail::be16(arp, 6);
    if (htype != 1 || ptype != 0x0800 || arp[4] != 6 || arp[5] != 4 || (oper != 1 && oper != 2)) {
      ++result.skipped;
      continue;
    }

    ArpEvent e;
    e.ts = static_cast<double>(ts_us - first_us) / 1e6;
    e.op = oper == 1 ? ArpOp::request : ArpOp::reply;
    e.sender_mac = detail::mac_at(arp, 8);
    e.sender_ip = detail::ip_at(arp, 14);
    e.target_mac = detail::mac_at(arp, 18);
    e.target_ip = detail::ip_at(arp, 24);
    e.src_node = NodeId("mac:" + e.sender_mac.to_string());
    const bool eth_broadcast = detail::mac_at(frame, 0).is_broadcast();
    const bool broadcast_ok = e.op == ArpOp::request || e.is_gratuitous();
    e.dst_node = eth_broadcast && broadcast_ok ? NodeId::broadcast() : NodeId("mac:" + e.target_mac.to_string());
    events.push_back(std::move(e));
  }
  if (events.empty()) throw DataError("pcap: no ARP events");
  result.trace = Trace(std::move(events));
  return result;
}

inline PcapImport import_pcap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open pcap '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return import_pcap(bytes);
}

}  // namespace arpguard
