#include <gtest/gtest.h>

#include <sstream>

#include "support/generators.hpp"
#include "support/helpers.hpp"
#include "support/oracle.hpp"

using namespace arpguard;

namespace {

const char* kMac1 = "02:00:00:00:00:01";
const char* kMac2 = "02:00:00:00:00:02";
const char* kMac3 = "02:00:00:00:00:03";

// `n` gratuitous claims of `ip` by `mac` at the given times.
std::vector<ArpEvent> claims(const std::vector<double>& times, const std::string& ip, const std::string& mac,
                             const std::string& node = "n1") {
  std::vector<ArpEvent> out;
  for (double t : times) out.push_back(th::gratuitous(t, node, ip, mac));
  return out;
}

Trace sorted_trace(std::vector<ArpEvent> evs, std::optional<double> T = std::nullopt) {
  std::stable_sort(evs.begin(), evs.end(), [](const auto& a, const auto& b) { return a.ts < b.ts; });
  return Trace(std::move(evs), T);
}

void expect_matches_prefix_oracle(const Trace& t, const FeatureConfig& cfg) {
  const auto xs = featurize(t, cfg);
  const auto h = oracle::unsolicited_flags(t.events(), cfg.request_window);
  ASSERT_EQ(xs.size(), t.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto o = cfg.streaming ? oracle::prefix_features(t.events(), i, t.duration(), cfg.delta)
                                 : oracle::whole_trace_features(t.events(), i, t.duration(), cfg.delta);
    EXPECT_NEAR(xs[i].r, o.r, 1e-12) << "event " << i;
    EXPECT_NEAR(xs[i].v, o.v, 1e-12) << "event " << i;
    EXPECT_NEAR(xs[i].c, o.c, 1e-12) << "event " << i;
    EXPECT_NEAR(xs[i].dt, o.dt, 1e-12) << "event " << i;
    EXPECT_EQ(xs[i].h, h[i]) << "event " << i;
  }
}

}  // namespace

TEST(PairFrequency, HandCounts) {
  auto evs = claims({1, 2, 3, 4, 5}, "10.0.0.1", kMac1);
  const Trace t10(evs, 10.0);
  EXPECT_DOUBLE_EQ(pair_frequency(t10, IpAddr4::parse("10.0.0.1"), MacAddr::parse(kMac1)), 0.5);
  EXPECT_EQ(pair_frequency(t10, IpAddr4::parse("10.0.0.1"), MacAddr::parse(kMac2)), 0.0);

  std::vector<double> times;
  for (int k = 0; k < 60; ++k) times.push_back(k);
  const Trace t60(claims(times, "10.0.0.1", kMac1), 60.0);
  EXPECT_DOUBLE_EQ(pair_frequency(t60, IpAddr4::parse("10.0.0.1"), MacAddr::parse(kMac1)), 1.0);
}

TEST(PairFrequency, ZeroDurationIsUndefined) {
  const Trace t(claims({0.0}, "10.0.0.1", kMac1));
  const auto msg = th::thrown_message<DataError>(
      [&] { pair_frequency(t, IpAddr4::parse("10.0.0.1"), MacAddr::parse(kMac1)); });
  EXPECT_NE(msg.find("undefined frequency"), std::string::npos);
  EXPECT_THROW(volatility(t, IpAddr4::parse("10.0.0.1"), {}), DataError);
  EXPECT_THROW(featurize(t, {}), DataError);
}

TEST(InconsistencyRatio, Fixtures) {
  const auto ip = IpAddr4::parse("10.0.0.1");
  EXPECT_EQ(inconsistency_ratio(Trace(claims({1, 2, 3}, "10.0.0.1", kMac1)), ip), 0.0);

  auto even = claims({1, 3}, "10.0.0.1", kMac1);
  for (auto& e : claims({2, 4}, "10.0.0.1", kMac2)) even.push_back(e);
  EXPECT_EQ(inconsistency_ratio(sorted_trace(even), ip), 0.5);

  auto skew = claims({1, 2, 3}, "10.0.0.1", kMac1);
  skew.push_back(th::gratuitous(4, "n2", "10.0.0.1", kMac2));
  EXPECT_EQ(inconsistency_ratio(Trace(skew), ip), 0.25);

  EXPECT_EQ(inconsistency_ratio(Trace(skew), IpAddr4::parse("10.0.0.200")), 0.0);
}

TEST(InconsistencyRatio, BoundedAndZeroExactlyForSingleClaimant) {
  Rng rng(31);
  for (int round = 0; round < 100; ++round) {
    const auto t = gen::random_trace(rng, {.max_events = 60, .ips = 4, .macs = 3});
    for (std::uint64_t k = 0; k < 4; ++k) {
      const auto ip = gen::ip_of(k);
      const double r = inconsistency_ratio(t, ip);
      std::set<MacAddr> macs;
      for (const auto& e : t.events()) {
        if (e.sender_ip == ip) macs.insert(e.sender_mac);
      }
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
      EXPECT_EQ(r == 0.0, macs.size() <= 1);
    }
  }
}

TEST(InconsistencyRatio, ScaleInvariant) {
  Rng rng(32);
  for (int round = 0; round < 50; ++round) {
    const auto base = gen::random_events(rng, {.max_events = 40, .ips = 3, .macs = 3});
    const int k = 2 + static_cast<int>(rng.below(4));
    std::vector<ArpEvent> scaled;
    for (const auto& e : base) {
      for (int c = 0; c < k; ++c) scaled.push_back(e);
    }
    const Trace a(base), b(scaled);
    for (std::uint64_t ip = 0; ip < 3; ++ip) {
      EXPECT_NEAR(inconsistency_ratio(a, gen::ip_of(ip)), inconsistency_ratio(b, gen::ip_of(ip)), 1e-15);
    }
  }
}

TEST(Volatility, Fixtures) {
  const auto ip = IpAddr4::parse("10.0.0.1");
  FeatureConfig cfg;
  cfg.delta = 0.1;
  EXPECT_EQ(volatility(Trace(claims({1.0}, "10.0.0.1", kMac1), 10.0), ip, cfg), 0.0);
  // gaps 0.05, 5.0, 0.02
  EXPECT_DOUBLE_EQ(volatility(Trace(claims({1.0, 1.05, 6.05, 6.07}, "10.0.0.1", kMac1), 10.0), ip, cfg), 0.2);
  EXPECT_EQ(volatility(Trace(claims({1.0, 2.0, 3.0}, "10.0.0.1", kMac1), 10.0), ip, cfg), 0.0);
}

TEST(Volatility, BoundedByClaimCount) {
  Rng rng(33);
  FeatureConfig cfg;
  for (int round = 0; round < 100; ++round) {
    const auto t = gen::random_trace(rng, {.max_events = 80, .ips = 3});
    cfg.delta = rng.uniform(0.01, 1.0);
    for (std::uint64_t k = 0; k < 3; ++k) {
      const auto ip = gen::ip_of(k);
      const auto n = std::count_if(t.events().begin(), t.events().end(), [&](const auto& e) { return e.sender_ip == ip; });
      const double bound = n == 0 ? 0.0 : static_cast<double>(n - 1) / t.duration();
      EXPECT_LE(volatility(t, ip, cfg), bound + 1e-15);
    }
  }
}

TEST(ConsistencyScore, Fixtures) {
  std::vector<double> ten;
  for (int k = 1; k <= 10; ++k) ten.push_back(k);
  EXPECT_DOUBLE_EQ(consistency_score(Trace(claims(ten, "10.0.0.1", kMac1)), NodeId("n1")), 0.1);

  std::vector<ArpEvent> fresh;
  for (int k = 1; k <= 5; ++k) fresh.push_back(th::gratuitous(k, "n1", "10.0.0." + std::to_string(k), kMac1));
  EXPECT_EQ(consistency_score(Trace(fresh), NodeId("n1")), 1.0);

  auto two = claims({1, 2}, "10.0.0.1", kMac1);
  for (auto& e : claims({3, 4}, "10.0.0.2", kMac1)) two.push_back(e);
  EXPECT_EQ(consistency_score(Trace(two), NodeId("n1")), 0.5);

  const auto msg = th::thrown_message<DataError>([&] { consistency_score(Trace(two), NodeId("n9")); });
  EXPECT_NE(msg.find("unknown node"), std::string::npos);
}

TEST(UnsolicitedReply, Fixtures) {
  PendingRequests pending;
  const auto req = th::request(1.0, "n1", "10.0.0.1", kMac1, "10.0.0.2");
  EXPECT_EQ(unsolicited_reply_heuristic(req, pending), 0);
  EXPECT_EQ(unsolicited_reply_heuristic(th::reply(1.01, "n2", "n1", "10.0.0.2", kMac2), pending), 0);
  // The request was consumed; a second answer is unsolicited.
  EXPECT_EQ(unsolicited_reply_heuristic(th::reply(1.02, "n2", "n1", "10.0.0.2", kMac2), pending), 1);
  // Nobody asked n3 about 10.0.0.2.
  EXPECT_EQ(unsolicited_reply_heuristic(th::reply(1.03, "n2", "n3", "10.0.0.2", kMac2), pending), 1);
  EXPECT_EQ(unsolicited_reply_heuristic(th::gratuitous(1.04, "n2", "10.0.0.2", kMac2), pending), 1);
}

TEST(UnsolicitedReply, EachRequestJustifiesOneReply) {
  Rng rng(34);
  for (int round = 0; round < 100; ++round) {
    PendingRequests pending(rng.uniform(0.5, 5.0));
    const auto t = gen::random_trace(rng, {.max_events = 200, .nodes = 3, .ips = 3});
    std::size_t requests = 0, solicited = 0;
    for (const auto& e : t.events()) {
      const int h = unsolicited_reply_heuristic(e, pending);
      if (e.op == ArpOp::request) {
        ++requests;
        EXPECT_EQ(h, 0);
      } else if (h == 0) {
        ++solicited;
      }
      EXPECT_LE(solicited, requests);
    }
  }
}

TEST(UnsolicitedReply, RequestsExpire) {
  PendingRequests pending(2.0);
  unsolicited_reply_heuristic(th::request(1.0, "n1", "10.0.0.1", kMac1, "10.0.0.2"), pending);
  EXPECT_EQ(unsolicited_reply_heuristic(th::reply(3.5, "n2", "n1", "10.0.0.2", kMac2), pending), 1);
  unsolicited_reply_heuristic(th::request(4.0, "n1", "10.0.0.1", kMac1, "10.0.0.2"), pending);
  EXPECT_EQ(unsolicited_reply_heuristic(th::reply(6.0, "n2", "n1", "10.0.0.2", kMac2), pending), 0);
}

TEST(Featurize, SingleEventTrace) {
  const Trace t({th::request(2.0, "n1", "10.0.0.1", kMac1, "10.0.0.2")}, 8.0);
  for (bool streaming : {true, false}) {
    FeatureConfig cfg;
    cfg.streaming = streaming;
    const auto xs = featurize(t, cfg);
    ASSERT_EQ(xs.size(), 1u);
    EXPECT_EQ(xs[0], (FeatureVector{0.0, 0.0, 1.0, 8.0, 0.0}));
  }
}

TEST(Featurize, TwoMacsClaimingOneIp) {
  const Trace t({th::gratuitous(1.0, "n1", "10.0.0.1", kMac1), th::gratuitous(2.0, "n2", "10.0.0.1", kMac2)});
  const auto xs = featurize(t, {});
  EXPECT_EQ(xs[1].r, 0.5);
  EXPECT_EQ(xs[1].dt, 1.0);
  EXPECT_EQ(xs[0].dt, 2.0);
}

TEST(Featurize, StreamingMatchesBruteForcePrefixOracle) {
  Rng rng(35);
  for (int round = 0; round < 60; ++round) {
    FeatureConfig cfg;
    cfg.delta = rng.uniform(0.01, 0.5);
    cfg.request_window = rng.uniform(0.5, 10.0);
    expect_matches_prefix_oracle(gen::random_trace(rng, {.max_events = 300}), cfg);
  }
}

TEST(Featurize, BatchMatchesWholeTraceOracle) {
  Rng rng(36);
  for (int round = 0; round < 30; ++round) {
    FeatureConfig cfg;
    cfg.streaming = false;
    cfg.delta = rng.uniform(0.01, 0.5);
    expect_matches_prefix_oracle(gen::random_trace(rng, {.max_events = 150}), cfg);
  }
}

TEST(Featurize, BatchFeaturesAgreeWithScalarOperations) {
  Rng rng(37);
  FeatureConfig cfg;
  cfg.streaming = false;
  for (int round = 0; round < 30; ++round) {
    const auto t = gen::random_trace(rng, {.max_events = 120});
    const auto xs = featurize(t, cfg);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto& e = t.events()[i];
      EXPECT_NEAR(xs[i].r, inconsistency_ratio(t, e.sender_ip), 1e-12);
      EXPECT_NEAR(xs[i].v, volatility(t, e.sender_ip, cfg), 1e-12);
      EXPECT_NEAR(xs[i].c, consistency_score(t, e.src_node), 1e-12);
    }
  }
}

TEST(Featurize, RangeInvariants) {
  Rng rng(38);
  for (int round = 0; round < 50; ++round) {
    const auto t = gen::random_trace(rng, {.max_events = 200});
    for (const auto& x : featurize(t, {})) {
      EXPECT_GE(x.r, 0.0);
      EXPECT_LE(x.r, 1.0);
      EXPECT_GT(x.c, 0.0);
      EXPECT_LE(x.c, 1.0);
      EXPECT_GE(x.dt, 0.0);
      EXPECT_TRUE(x.h == 0.0 || x.h == 1.0);
    }
  }
}

TEST(FeatureConfig, RejectsNonPositiveDelta) {
  FeatureConfig cfg;
  cfg.delta = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.delta = 0.1;
  cfg.request_window = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(FeatureCsv, RoundTrips) {
  Rng rng(39);
  const auto t = gen::random_trace(rng, {.max_events = 100});
  const auto rows = feature_rows(t, featurize(t, {}));
  std::ostringstream os;
  write_feature_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "ts,src_node,r,v,c,dt,h,label");
  std::istringstream in(os.str());
  const auto back = read_feature_csv(in);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].ts, rows[i].ts);
    EXPECT_EQ(back[i].src_node, rows[i].src_node);
    EXPECT_EQ(back[i].x, rows[i].x);
    EXPECT_EQ(back[i].label, rows[i].label);
  }
}

TEST(FeatureCsv, CorruptRowNamesLine) {
  std::istringstream in("ts,src_node,r,v,c,dt,h,label\n1,n1,0,0,1,5,0,0\n2,n1,0,zero,1,5,0,0\n");
  const auto msg = th::thrown_message<ParseError>([&] { read_feature_csv(in); });
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  std::istringstream bad_label("ts,src_node,r,v,c,dt,h,label\n1,n1,0,0,1,5,0,7\n");
  EXPECT_THROW(read_feature_csv(bad_label), ParseError);
  std::istringstream bad_header("a,b\n");
  EXPECT_THROW(read_feature_csv(bad_header), ParseError);
}
