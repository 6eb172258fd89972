#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "arpguard/error.hpp"
#include "arpguard/rng.hpp"
#include "arpguard/trace.hpp"

namespace arpguard {

struct AttackEpisode {
  NodeId attacker;
  IpAddr4 victim_ip;
  double start = 0.0;
  double duration = 0.0;
  double rate = 0.0;  ///< spoofed replies per second

  bool operator==(const AttackEpisode&) const = default;
};

struct SimConfig {
  explicit SimConfig(std::uint64_t seed_value) : seed(seed_value) {}

  int devices = 50;
  double duration = 3600.0;
  /// Mean ARP requests per second issued by each device.
  double request_rate = 0.05;
  double latency_min = 0.001;
  double latency_max = 0.020;
  int attacks = 20;
  double burst_rate = 2.0;
  double burst_duration = 30.0;
  /// Share of spoofed replies sent as gratuitous broadcasts; the rest go unicast to a peer.
  double gratuitous_share = 0.5;
  /// When nonempty, these episodes are used verbatim instead of random placement.
  std::vector<AttackEpisode> episodes;
  std::uint64_t seed;
};

struct Device {
  NodeId node;
  IpAddr4 ip;
  MacAddr mac;
};

struct Simulation {
  Trace trace;
  std::vector<Device> devices;
  std::vector<AttackEpisode> episodes;
};

inline Device make_device(int k) {
  const auto id = static_cast<std::uint32_t>(k);
  return {NodeId("n" + std::to_string(k)), IpAddr4::from_u32(0x0a000000u + id),
          MacAddr(MacAddr::Octets{0x02, 0x00, 0x00, 0x00, static_cast<std::uint8_t>(id >> 8),
                                  static_cast<std::uint8_t>(id & 0xff)})};
}

namespace detail {

inline double to_micros(double t) { return std::round(t * 1e6) / 1e6; }

inline void validate(const SimConfig& c) {
  if (c.devices < 2) throw ConfigError("simulation needs at least 2 devices");
  if (c.devices > 65535) throw ConfigError("too many devices");
  if (!(c.duration > 0.0)) throw ConfigError("duration must be > 0");
  if (!(c.request_rate >= 0.0)) throw ConfigError("request rate must be >= 0");
  if (!(c.latency_min >= 1e-6 && c.latency_max >= c.latency_min)) throw ConfigError("invalid reply latency range");
  if (c.attacks < 0) throw ConfigError("attack count must be >= 0");
  if (!(c.gratuitous_share >= 0.0 && c.gratuitous_share <= 1.0)) throw ConfigError("gratuitous share must be in [0,1]");
  if (c.episodes.empty() && c.attacks > 0) {
    if (c.attacks > c.devices) throw ConfigError("attack count exceeds device count (victims are distinct)");
    if (!(c.burst_rate > 0.0)) throw ConfigError("burst rate must be > 0");
    if (!(c.burst_duration > 0.0 && c.burst_duration <= c.duration)) {
      throw ConfigError("burst duration must be in (0, duration]");
    }
  }
}

}  // namespace detail

/// Generates a labeled trace: Poisson benign request/reply traffic plus injected
/// spoofed-reply bursts. Identical configs give identical traces.
inline Simulation simulate(const SimConfig& config) {
  detail::validate(config);
  Rng rng(config.seed);
  Simulation sim;
  for (int k = 1; k <= config.devices; ++k) sim.devices.push_back(make_device(k));
  const auto& devs = sim.devices;
  const auto n = devs.size();

  std::map<IpAddr4, std::size_t> owner;
  std::map<NodeId, std::size_t> by_node;
  for (std::size_t i = 0; i < n; ++i) {
    owner[devs[i].ip] = i;
    by_node[devs[i].node] = i;
  }

  if (!config.episodes.empty()) {
    for (const auto& ep : config.episodes) {
      auto a = by_node.find(ep.attacker);
      if (a == by_node.end()) throw ConfigError("unknown attacker '" + ep.attacker.str() + "'");
      if (!owner.contains(ep.victim_ip)) throw ConfigError("victim ip " + ep.victim_ip.to_string() + " is not a device");
      if (devs[a->second].ip == ep.victim_ip) throw ConfigError("attacker collides with victim");
      if (!(ep.rate > 0.0)) throw ConfigError("episode rate must be > 0");
      if (ep.start < 0.0 || !(ep.duration > 0.0) || ep.start + ep.duration > config.duration) {
        throw ConfigError("attack episode exceeds simulation duration");
      }
    }
    sim.episodes = config.episodes;
  } else if (config.attacks > 0) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < static_cast<std::size_t>(config.attacks); ++i) {
      std::swap(order[i], order[i + rng.below(n - i)]);
      const auto victim = order[i];
      auto attacker = static_cast<std::size_t>(rng.below(n - 1));
      if (attacker >= victim) ++attacker;
      const double start = detail::to_micros(rng.uniform() * (config.duration - config.burst_duration));
      sim.episodes.push_back({devs[attacker].node, devs[victim].ip, start, config.burst_duration, config.burst_rate});
    }
  }

  struct Pending {
    double ts;
    std::uint64_t seq;
    ArpEvent event;
  };
  std::vector<Pending> out;
  std::uint64_t seq = 0;
  auto emit = [&](ArpEvent e) {
    const double ts = e.ts;
    out.push_back({ts, seq++, std::move(e)});
  };

  // Benign: each device issues Poisson requests; the true owner replies after a uniform latency.
  if (config.request_rate > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      double t = 0.0;
      while (true) {
        t += rng.exponential(config.request_rate);
        if (t >= config.duration) break;
        auto peer = static_cast<std::size_t>(rng.below(n - 1));
        if (peer >= i) ++peer;
        const double latency = rng.uniform(config.latency_min, config.latency_max);
        const double req_ts = detail::to_micros(t);
        const double rep_ts = detail::to_micros(t + latency);
        if (rep_ts > config.duration) continue;
        const auto& me = devs[i];
        const auto& them = devs[peer];
        emit({req_ts, me.node, NodeId::broadcast(), ArpOp::request, me.ip, me.mac, them.ip, MacAddr{}, Label::benign});
        emit({rep_ts, them.node, me.node, ArpOp::reply, them.ip, them.mac, me.ip, me.mac, Label::benign});
      }
    }
  }

  // Attacks: the attacker binds the victim's IP to its own MAC with unsolicited replies.
  for (const auto& ep : sim.episodes) {
    const auto& attacker = devs[by_node.at(ep.attacker)];
    const auto victim = owner.at(ep.victim_ip);
    const double end = ep.start + ep.duration;
    auto spoof = [&](double ts) {
      ArpEvent e{detail::to_micros(ts), attacker.node, NodeId::broadcast(), ArpOp::reply, ep.victim_ip,
                 attacker.mac, ep.victim_ip, MacAddr::broadcast(), Label::spoof};
      const bool can_unicast = n > 2;
      if (can_unicast && rng.uniform() >= config.gratuitous_share) {
        auto peer = static_cast<std::size_t>(rng.below(n - 2));
        const auto lo = std::min(victim, by_node.at(ep.attacker));
        const auto hi = std::max(victim, by_node.at(ep.attacker));
        if (peer >= lo) ++peer;
        if (peer >= hi) ++peer;
        e.dst_node = devs[peer].node;
        e.target_ip = devs[peer].ip;
        e.target_mac = devs[peer].mac;
      }
      e.ts = std::min(e.ts, detail::to_micros(end));
      emit(std::move(e));
    };
    std::size_t emitted = 0;
    for (double t = ep.start + rng.exponential(ep.rate); t < end; t += rng.exponential(ep.rate)) {
      spoof(t);
      ++emitted;
    }
    if (emitted == 0) spoof(ep.start);
  }

  std::sort(out.begin(), out.end(), [](const Pending& a, const Pending& b) {
    return a.ts != b.ts ? a.ts < b.ts : a.seq < b.seq;
  });
  std::vector<ArpEvent> events;
  events.reserve(out.size());
  for (auto& p : out) events.push_back(std::move(p.event));
  std::vector<NodeId> nodes;
  for (const auto& d : devs) nodes.push_back(d.node);
  sim.trace = Trace(std::move(events), config.duration, std::move(nodes));
  return sim;
}

/// Ground-truth ownership table and attack schedule.
inline nlohmann::ordered_json ownership_json(const Simulation& sim) {
  nlohmann::ordered_json j;
  auto devices = nlohmann::ordered_json::array();
  for (const auto& d : sim.devices) {
    nlohmann::ordered_json dj;
    dj["node"] = d.node.str();
    dj["ip"] = d.ip.to_string();
    dj["mac"] = d.mac.to_string();
    devices.push_back(std::move(dj));
  }
  j["devices"] = std::move(devices);
  auto episodes = nlohmann::ordered_json::array();
  for (const auto& e : sim.episodes) {
    nlohmann::ordered_json ej;
    ej["attacker"] = e.attacker.str();
    ej["victim_ip"] = e.victim_ip.to_string();
    ej["start"] = e.start;
    ej["duration"] = e.duration;
    ej["rate"] = e.rate;
    episodes.push_back(std::move(ej));
  }
  j["episodes"] = std::move(episodes);
  return j;
}

inline std::vector<AttackEpisode> episodes_from_ownership(const nlohmann::json& j) {
  std::vector<AttackEpisode> out;
  try {
    for (const auto& e : j.at("episodes")) {
      out.push_back({NodeId(e.at("attacker").get<std::string>()), IpAddr4::parse(e.at("victim_ip").get<std::string>()),
                     e.at("start").get<double>(), e.at("duration").get<double>(), e.at("rate").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed ownership file: ") + e.what());
  }
  return out;
}

/// Spoofed events grouped by (source node, claimed IP), broken where consecutive
/// events are more than `max_gap` seconds apart. Holds event indices.
struct ObservedEpisode {
  NodeId attacker;
  IpAddr4 victim_ip;
  double start = 0.0;
  double end = 0.0;
  std::vector<std::size_t> events;
};

inline std::vector<ObservedEpisode> find_episodes(const Trace& trace, double max_gap = 60.0) {
  std::map<std::pair<NodeId, IpAddr4>, std::vector<ObservedEpisode>> groups;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace.events()[i];
    if (e.label != Label::spoof) continue;
    auto& eps = groups[{e.src_node, e.sender_ip}];
    if (eps.empty() || e.ts - eps.back().end > max_gap) eps.push_back({e.src_node, e.sender_ip, e.ts, e.ts, {}});
    eps.back().end = e.ts;
    eps.back().events.push_back(i);
  }
  std::vector<ObservedEpisode> out;
  for (auto& [key, eps] : groups) {
    for (auto& ep : eps) out.push_back(std::move(ep));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.start != b.start ? a.start < b.start : a.events.front() < b.events.front();
  });
  return out;
}

struct TraceSplit {
  Trace train;
  Trace test;
  std::size_t train_episodes = 0;
  std::size_t test_episodes = 0;
};

/// Episode-aware split: whole attack episodes go to one side (round(fraction * E) to
/// train), benign events follow their time block. `fraction` is the training share.
inline TraceSplit split_trace(const Trace& trace, double fraction, std::uint64_t seed, int blocks = 20) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must be in (0,1)");
  if (blocks < 2) throw ConfigError("split needs at least 2 time blocks");
  for (const auto& e : trace.events()) {
    if (!e.label) throw DataError("split requires a fully labeled trace");
  }
  Rng rng(seed);
  auto shuffled = [&rng](std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    return order;
  };

  const auto episodes = find_episodes(trace);
  std::vector<char> in_train(trace.size(), 0);
  const auto ep_order = shuffled(episodes.size());
  const auto train_eps = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(episodes.size())));
  for (std::size_t k = 0; k < ep_order.size(); ++k) {
    if (k < train_eps) {
      for (auto i : episodes[ep_order[k]].events) in_train[i] = 1;
    }
  }

  const auto nb = static_cast<std::size_t>(blocks);
  const auto block_order = shuffled(nb);
  const auto train_blocks = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(nb)));
  std::vector<char> block_train(nb, 0);
  for (std::size_t k = 0; k < train_blocks; ++k) block_train[block_order[k]] = 1;
  const double block_len = trace.duration() > 0.0 ? trace.duration() / static_cast<double>(nb) : 1.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace.events()[i];
    if (e.label == Label::spoof) continue;
    const auto b = std::min(nb - 1, static_cast<std::size_t>(e.ts / block_len));
    in_train[i] = block_train[b];
  }

  std::vector<ArpEvent> train, test;
  for (std::size_t i = 0; i < trace.size(); ++i) (in_train[i] ? train : test).push_back(trace.events()[i]);
  auto both_classes = [](const std::vector<ArpEvent>& evs) {
    bool zero = false, one = false;
    for (const auto& e : evs) (e.label == Label::spoof ? one : zero) = true;
    return zero && one;
  };
  if (!both_classes(train)) throw DataError("split leaves the training side without both classes");
  if (!both_classes(test)) throw DataError("split leaves the test side without both classes");
  return {Trace(std::move(train), trace.duration(), trace.nodes()), Trace(std::move(test), trace.duration(), trace.nodes()),
          train_eps, episodes.size() - train_eps};
}

}  // namespace arpguard
