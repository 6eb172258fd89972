#include <gtest/gtest.h>

#include <sstream>

#include "support/generators.hpp"
#include "support/helpers.hpp"
#include "support/pcap_fixture.hpp"

using namespace arpguard;

namespace {

constexpr const char* kRequestLine =
    R"({"ts":0.0,"src":"n1","dst":"*","op":"request","sip":"10.0.0.1","smac":"aa:00:00:00:00:01","tip":"10.0.0.2","tmac":"00:00:00:00:00:00"})";

std::string with_field(const std::string& field, const std::string& value) {
  auto j = nlohmann::json::parse(kRequestLine);
  j[field] = nlohmann::json::parse(value);
  return j.dump();
}

}  // namespace

TEST(MacAddr, ParsesAndPrintsCanonicalForm) {
  const auto m = MacAddr::parse("AA:0b:Cc:00:ff:10");
  EXPECT_EQ(m.to_string(), "aa:0b:cc:00:ff:10");
  EXPECT_EQ(MacAddr::parse(m.to_string()), m);
}

TEST(MacAddr, RejectsMalformedText) {
  for (const char* bad : {"", "aa:bb:cc:dd:ee", "aa:bb:cc:dd:ee:fg", "aa-bb-cc-dd-ee-ff", "aa:bb:cc:dd:ee:ff:00"}) {
    EXPECT_THROW(MacAddr::parse(bad), ParseError) << bad;
  }
}

TEST(MacAddr, RoundTripsRandomValues) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    MacAddr::Octets o{};
    for (auto& b : o) b = static_cast<std::uint8_t>(rng.below(256));
    const MacAddr m(o);
    EXPECT_EQ(MacAddr::parse(m.to_string()), m);
  }
}

TEST(IpAddr4, RoundTripsRandomValues) {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto ip = IpAddr4::from_u32(static_cast<std::uint32_t>(rng.next()));
    EXPECT_EQ(IpAddr4::parse(ip.to_string()), ip);
    EXPECT_EQ(IpAddr4::from_u32(ip.to_u32()), ip);
  }
}

TEST(IpAddr4, RejectsOutOfRangeOctet) {
  EXPECT_NE(th::thrown_message<ParseError>([] { IpAddr4::parse("10.0.0.300"); }).find("invalid IPv4 octet"),
            std::string::npos);
  for (const char* bad : {"10.0.0", "10.0.0.1.2", "10.0.0.01", "a.b.c.d", "10..0.1", ""}) {
    EXPECT_THROW(IpAddr4::parse(bad), ParseError) << bad;
  }
}

TEST(NodeId, MustBeNonEmpty) { EXPECT_THROW(NodeId(""), ParseError); }

TEST(ParseTraceLine, SchemaExample) {
  const auto e = parse_trace_line(kRequestLine);
  EXPECT_EQ(e.ts, 0.0);
  EXPECT_EQ(e.op, ArpOp::request);
  EXPECT_TRUE(e.is_broadcast());
  EXPECT_EQ(e.src_node.str(), "n1");
  EXPECT_EQ(e.sender_ip.to_string(), "10.0.0.1");
  EXPECT_EQ(e.sender_mac.to_string(), "aa:00:00:00:00:01");
  EXPECT_EQ(e.target_ip.to_string(), "10.0.0.2");
  EXPECT_FALSE(e.label.has_value());
}

TEST(ParseTraceLine, InvalidOpNamesFieldAndLine) {
  const auto msg = th::thrown_message<ParseError>([] { parse_trace_line(with_field("op", R"("query")"), 7); });
  EXPECT_NE(msg.find("invalid op"), std::string::npos);
  EXPECT_NE(msg.find("line 7"), std::string::npos);
  EXPECT_NE(msg.find("'op'"), std::string::npos);
}

TEST(ParseTraceLine, OutOfRangeOctet) {
  const auto msg = th::thrown_message<ParseError>([] { parse_trace_line(with_field("sip", R"("10.0.0.300")")); });
  EXPECT_NE(msg.find("invalid IPv4 octet"), std::string::npos);
  EXPECT_NE(msg.find("'sip'"), std::string::npos);
}

TEST(ParseTraceLine, RejectsMalformedRecords) {
  EXPECT_THROW(parse_trace_line("not json"), ParseError);
  EXPECT_THROW(parse_trace_line("[1,2]"), ParseError);
  EXPECT_THROW(parse_trace_line(with_field("ts", "-1")), ParseError);
  EXPECT_THROW(parse_trace_line(with_field("ts", R"("0")")), ParseError);
  EXPECT_THROW(parse_trace_line(with_field("src", R"("")")), ParseError);
  EXPECT_THROW(parse_trace_line(with_field("label", "2")), ParseError);
  EXPECT_THROW(parse_trace_line(with_field("smac", R"("zz:00:00:00:00:01")")), ParseError);
  auto missing = nlohmann::json::parse(kRequestLine);
  missing.erase("tip");
  EXPECT_NE(th::thrown_message<ParseError>([&] { parse_trace_line(missing.dump()); }).find("'tip'"),
            std::string::npos);
}

TEST(ParseTraceLine, BroadcastOnlyForRequestsAndGratuitousReplies) {
  auto j = nlohmann::json::parse(kRequestLine);
  j["op"] = "reply";
  EXPECT_THROW(parse_trace_line(j.dump()), ParseError);
  j["tip"] = j["sip"];
  EXPECT_NO_THROW(parse_trace_line(j.dump()));
}

TEST(ParseTraceLine, FormatRoundTripsRandomEvents) {
  Rng rng(5);
  for (int round = 0; round < 20; ++round) {
    for (const auto& e : gen::random_events(rng, {.max_events = 50})) {
      EXPECT_EQ(parse_trace_line(format_trace_line(e)), e);
    }
  }
}

TEST(ReadTrace, ThreeLineFileUsesLastTimestampAsDuration) {
  std::ostringstream os;
  os << format_trace_line(th::request(0.5, "n1", "10.0.0.1", "02:00:00:00:00:01", "10.0.0.2")) << '\n'
     << format_trace_line(th::reply(0.6, "n2", "n1", "10.0.0.2", "02:00:00:00:00:02")) << '\n'
     << format_trace_line(th::request(2.25, "n2", "10.0.0.2", "02:00:00:00:00:02", "10.0.0.1")) << '\n';
  std::istringstream in(os.str());
  const auto t = read_trace(in);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.duration(), 2.25);
  EXPECT_EQ(t.nodes(), (std::vector<NodeId>{NodeId("n1"), NodeId("n2")}));
}

TEST(ReadTrace, TimestampRegressionNamesLine) {
  std::ostringstream os;
  os << format_trace_line(th::request(1.0, "n1", "10.0.0.1", "02:00:00:00:00:01", "10.0.0.2")) << '\n'
     << format_trace_line(th::request(0.5, "n1", "10.0.0.1", "02:00:00:00:00:01", "10.0.0.2")) << '\n';
  std::istringstream in(os.str());
  const auto msg = th::thrown_message<DataError>([&] { read_trace(in); });
  EXPECT_NE(msg.find("timestamp regression at line 2"), std::string::npos) << msg;
}

TEST(ReadTrace, HeaderDurationTakesPrecedence) {
  std::ostringstream os;
  os << R"({"header":true,"duration":60.0})" << '\n'
     << format_trace_line(th::request(42.0, "n1", "10.0.0.1", "02:00:00:00:00:01", "10.0.0.2")) << '\n';
  std::istringstream in(os.str());
  EXPECT_EQ(read_trace(in).duration(), 60.0);
}

TEST(ReadTrace, HeaderNodeListIsValidated) {
  std::ostringstream os;
  os << R"({"header":true,"nodes":["n2"]})" << '\n'
     << format_trace_line(th::request(1.0, "n1", "10.0.0.1", "02:00:00:00:00:01", "10.0.0.2")) << '\n';
  std::istringstream in(os.str());
  EXPECT_THROW(read_trace(in), DataError);
}

TEST(ReadTrace, HeaderDurationBelowTimestampsIsRejected) {
  std::ostringstream os;
  os << R"({"header":true,"duration":10.0})" << '\n'
     << format_trace_line(th::request(42.0, "n1", "10.0.0.1", "02:00:00:00:00:01", "10.0.0.2")) << '\n';
  std::istringstream in(os.str());
  EXPECT_THROW(read_trace(in), DataError);
}

TEST(ReadTrace, HeaderOnlyAllowedFirst) {
  std::ostringstream os;
  os << format_trace_line(th::request(1.0, "n1", "10.0.0.1", "02:00:00:00:00:01", "10.0.0.2")) << '\n'
     << R"({"header":true,"duration":60.0})" << '\n';
  std::istringstream in(os.str());
  EXPECT_THROW(read_trace(in), ParseError);
}

TEST(ReadTrace, EmptyFile) {
  std::istringstream in("\n\n");
  EXPECT_NE(th::thrown_message<DataError>([&] { read_trace(in); }).find("empty trace"), std::string::npos);
  std::istringstream header_only(R"({"header":true,"duration":5})");
  EXPECT_THROW(read_trace(header_only), DataError);
}

TEST(ReadTrace, MissingFile) { EXPECT_THROW(read_trace(std::string("/nonexistent/trace.jsonl")), DataError); }

TEST(ReadTrace, CanonicalFilesRoundTripByteForByte) {
  Rng rng(21);
  for (int round = 0; round < 25; ++round) {
    const auto t = gen::random_trace(rng, {.max_events = 200});
    const auto text = to_jsonl(t);
    std::istringstream in(text);
    const auto back = read_trace(in);
    EXPECT_EQ(back, t);
    EXPECT_EQ(to_jsonl(back), text);
  }
}

TEST(ReadTrace, PreservesFileOrderForEqualTimestamps) {
  std::vector<ArpEvent> evs;
  for (int k = 0; k < 6; ++k) {
    evs.push_back(th::request(1.0, "n" + std::to_string(k), "10.0.0.1", "02:00:00:00:00:01", "10.0.0.2"));
  }
  std::istringstream in(to_jsonl(Trace(evs)));
  const auto t = read_trace(in);
  for (int k = 0; k < 6; ++k) EXPECT_EQ(t.events()[static_cast<std::size_t>(k)].src_node.str(), "n" + std::to_string(k));
}

// --- pcap -----------------------------------------------------------------------

namespace {

const auto kMacA = MacAddr::parse("02:00:00:00:00:0a");
const auto kMacB = MacAddr::parse("02:00:00:00:00:0b");
const auto kIpA = IpAddr4::parse("10.0.0.10");
const auto kIpB = IpAddr4::parse("10.0.0.11");

std::vector<std::uint8_t> mixed_capture(bool big_endian) {
  fixture::PcapWriter w(big_endian);
  w.add({100, 0, fixture::tcp_frame()});
  w.add({100, 250000, fixture::arp_frame(kMacA, 2, kMacB, kIpB, kMacA, kIpA)});
  w.add({100, 300000, fixture::tcp_frame()});
  w.add({100, 400000, fixture::tcp_frame()});
  w.add({101, 0, fixture::arp_frame(MacAddr::broadcast(), 2, kMacB, kIpB, MacAddr::broadcast(), kIpB)});
  w.add({101, 500000, fixture::tcp_frame()});
  w.add({102, 0, fixture::tcp_frame()});
  return w.bytes();
}

}  // namespace

TEST(ImportPcap, TwoRepliesAmongFiveTcpFrames) {
  const auto bytes = mixed_capture(false);
  const auto r = import_pcap(bytes);
  EXPECT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.skipped, 5u);
  EXPECT_EQ(r.truncated, 0u);
  const auto& e0 = r.trace.events()[0];
  EXPECT_DOUBLE_EQ(e0.ts, 0.25);
  EXPECT_EQ(e0.op, ArpOp::reply);
  EXPECT_EQ(e0.src_node.str(), "mac:02:00:00:00:00:0b");
  EXPECT_EQ(e0.dst_node.str(), "mac:02:00:00:00:00:0a");
  EXPECT_EQ(e0.sender_ip, kIpB);
  EXPECT_FALSE(e0.label.has_value());
  const auto& e1 = r.trace.events()[1];
  EXPECT_TRUE(e1.is_broadcast());
  EXPECT_DOUBLE_EQ(e1.ts, 1.0);
}

TEST(ImportPcap, SwappedMagicParsesIdentically) {
  const auto native = import_pcap(mixed_capture(false));
  const auto swapped = import_pcap(mixed_capture(true));
  EXPECT_EQ(native.trace, swapped.trace);
  EXPECT_EQ(native.skipped, swapped.skipped);
  EXPECT_EQ(native.frames, swapped.frames);
}

TEST(ImportPcap, RandomArpOnlyCapturesKeepEveryFrameInBothByteOrders) {
  Rng rng(8);
  for (int round = 0; round < 30; ++round) {
    const auto n = 1 + rng.below(40);
    fixture::PcapWriter le(false), be(true);
    std::uint32_t usec = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      usec += static_cast<std::uint32_t>(rng.below(2'000'000));
      const auto smac = gen::mac_of(rng.below(5));
      const auto tmac = gen::mac_of(rng.below(5));
      const auto sip = gen::ip_of(rng.below(5));
      const auto tip = gen::ip_of(rng.below(5));
      const std::uint16_t oper = rng.below(2) == 0 ? 1 : 2;
      const auto frame = fixture::arp_frame(oper == 1 ? MacAddr::broadcast() : tmac, oper, smac, sip, tmac, tip);
      const fixture::Frame f{usec / 1'000'000, usec % 1'000'000, frame};
      le.add(f);
      be.add(f);
    }
    const auto a = import_pcap(le.bytes());
    const auto b = import_pcap(be.bytes());
    EXPECT_EQ(a.trace.size(), n);
    EXPECT_EQ(a.frames, n);
    EXPECT_EQ(a.trace, b.trace);
  }
}

TEST(ImportPcap, NoArpFrames) {
  fixture::PcapWriter w(false);
  w.add({1, 0, fixture::tcp_frame()});
  EXPECT_NE(th::thrown_message<DataError>([&] { import_pcap(w.bytes()); }).find("no ARP events"), std::string::npos);
}

TEST(ImportPcap, BadMagicAndLinkType) {
  auto bytes = mixed_capture(false);
  bytes[0] ^= 0xff;
  EXPECT_THROW(import_pcap(bytes), ParseError);
  fixture::PcapWriter raw(false, 101);
  raw.add({1, 0, fixture::arp_frame(kMacA, 2, kMacB, kIpB, kMacA, kIpA)});
  EXPECT_THROW(import_pcap(raw.bytes()), ParseError);
  EXPECT_THROW(import_pcap(std::vector<std::uint8_t>(10, 0)), ParseError);
}

TEST(ImportPcap, TruncatedFramesAreSkippedAndCounted) {
  fixture::PcapWriter w(false);
  w.add({1, 0, fixture::arp_frame(kMacA, 2, kMacB, kIpB, kMacA, kIpA)});
  auto short_arp = fixture::arp_frame(kMacA, 2, kMacB, kIpB, kMacA, kIpA);
  short_arp.resize(30);
  w.add({2, 0, short_arp});
  auto bytes = w.bytes();
  // A final record header promising more bytes than the file holds.
  fixture::PcapWriter tail(false);
  tail.add({3, 0, fixture::arp_frame(kMacA, 2, kMacB, kIpB, kMacA, kIpA), 500});
  bytes.insert(bytes.end(), tail.bytes().begin() + 24, tail.bytes().end());
  const auto r = import_pcap(bytes);
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.truncated, 2u);
}

TEST(ImportPcap, NonEthernetArpVariantsAreSkipped) {
  fixture::PcapWriter w(false);
  w.add({1, 0, fixture::arp_frame(kMacA, 2, kMacB, kIpB, kMacA, kIpA)});
  auto rarp = fixture::arp_frame(kMacA, 3, kMacB, kIpB, kMacA, kIpA);
  w.add({2, 0, rarp});
  auto odd_htype = fixture::arp_frame(kMacA, 2, kMacB, kIpB, kMacA, kIpA);
  odd_htype[15] = 6;
  w.add({3, 0, odd_htype});
  const auto r = import_pcap(w.bytes());
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.skipped, 2u);
}
