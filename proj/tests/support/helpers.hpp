#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "arpguard/arpguard.hpp"

namespace th {

using namespace arpguard;

inline ArpEvent request(double ts, const std::string& src, const std::string& sip, const std::string& smac,
                        const std::string& tip) {
  ArpEvent e;
  e.ts = ts;
  e.src_node = NodeId(src);
  e.dst_node = NodeId::broadcast();
  e.op = ArpOp::request;
  e.sender_ip = IpAddr4::parse(sip);
  e.sender_mac = MacAddr::parse(smac);
  e.target_ip = IpAddr4::parse(tip);
  return e;
}

inline ArpEvent reply(double ts, const std::string& src, const std::string& dst, const std::string& sip,
                      const std::string& smac, const std::string& tip = "10.0.0.99",
                      const std::string& tmac = "02:00:00:00:00:99") {
  ArpEvent e;
  e.ts = ts;
  e.src_node = NodeId(src);
  e.dst_node = NodeId(dst);
  e.op = ArpOp::reply;
  e.sender_ip = IpAddr4::parse(sip);
  e.sender_mac = MacAddr::parse(smac);
  e.target_ip = IpAddr4::parse(tip);
  e.target_mac = MacAddr::parse(tmac);
  return e;
}

inline ArpEvent gratuitous(double ts, const std::string& src, const std::string& sip, const std::string& smac) {
  auto e = reply(ts, src, "*", sip, smac, sip, "ff:ff:ff:ff:ff:ff");
  return e;
}

inline ArpEvent labeled(ArpEvent e, Label l) {
  e.label = l;
  return e;
}

/// Runs `f` and returns the exception message it throws, failing the test if it does not.
template <typename Ex = std::exception, typename F>
std::string thrown_message(F&& f) {
  try {
    f();
  } catch (const Ex& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected an exception";
  return {};
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("arpguard-" + tag + "-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
             std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace th
