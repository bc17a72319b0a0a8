#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "manip2d/mlp.hpp"
#include "manip2d/pose.hpp"

namespace manip2d {

/// Minimal binary archive for bit-exact checkpoints. Little-endian host
/// layout; doubles round-trip exactly.
class ArchiveWriter {
 public:
  explicit ArchiveWriter(const std::string& path)
      : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  }

  void raw(const void* data, size_t bytes) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  }

  template <typename T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    raw(&v, sizeof(T));
  }

  void put(double v) { pod(v); }
  void put(int64_t v) { pod(v); }
  void put(uint64_t v) { pod(v); }
  void put(int32_t v) { pod(v); }
  void put(bool v) { pod(static_cast<uint8_t>(v ? 1 : 0)); }
  void put(const std::string& s) {
    put(static_cast<uint64_t>(s.size()));
    raw(s.data(), s.size());
  }
  void put(const VecX& v) {
    put(static_cast<int64_t>(v.size()));
    raw(v.data(), sizeof(double) * v.size());
  }
  void put(const MatX& m) {
    put(static_cast<int64_t>(m.rows()));
    put(static_cast<int64_t>(m.cols()));
    raw(m.data(), sizeof(double) * m.size());
  }
  void put(const Vec2& v) { raw(v.data(), sizeof(double) * 2); }
  void put(const Vec3& v) { raw(v.data(), sizeof(double) * 3); }
  void put(const Pose2& p) {
    put(p.x);
    put(p.y);
    put(p.theta);
  }
  void put(const Mlp& net) {
    put(static_cast<int64_t>(net.sizes.size()));
    for (int s : net.sizes) put(static_cast<int64_t>(s));
    for (const auto& m : net.w) put(m);
    for (const auto& v : net.b) put(v);
  }
  void put(const AdamOpt& opt) {
    put(opt.t_);
    put(static_cast<int64_t>(opt.m_.size()));
    for (const auto& v : opt.m_) put(v);
    for (const auto& v : opt.v_) put(v);
  }

  bool good() const { return out_.good(); }

 private:
  std::ofstream out_;
};

class ArchiveReader {
 public:
  explicit ArchiveReader(const std::string& path)
      : in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open checkpoint: " + path);
  }

  void raw(void* data, size_t bytes) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
    if (!in_) throw std::runtime_error("truncated checkpoint");
  }

  template <typename T>
  T pod() {
    static_assert(std::is_trivially_copyable_v<T>);
    T v;
    raw(&v, sizeof(T));
    return v;
  }

  double get_double() { return pod<double>(); }
  int64_t get_i64() { return pod<int64_t>(); }
  uint64_t get_u64() { return pod<uint64_t>(); }
  int32_t get_i32() { return pod<int32_t>(); }
  bool get_bool() { return pod<uint8_t>() != 0; }
  std::string get_string() {
    const uint64_t n = get_u64();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  VecX get_vec() {
    const int64_t n = get_i64();
    VecX v(n);
    raw(v.data(), sizeof(double) * n);
    return v;
  }
  MatX get_mat() {
    const int64_t r = get_i64(), c = get_i64();
    MatX m(r, c);
    raw(m.data(), sizeof(double) * m.size());
    return m;
  }
  Vec2 get_vec2() {
    Vec2 v;
    raw(v.data(), sizeof(double) * 2);
    return v;
  }
  Vec3 get_vec3() {
    Vec3 v;
    raw(v.data(), sizeof(double) * 3);
    return v;
  }
  Pose2 get_pose() {
    Pose2 p;
    p.x = get_double();
    p.y = get_double();
    p.theta = get_double();
    return p;
  }
  Mlp get_mlp() {
    Mlp net;
    const int64_t n = get_i64();
    net.sizes.resize(n);
    for (auto& s : net.sizes) s = static_cast<int>(get_i64());
    net.w.resize(n - 1);
    net.b.resize(n - 1);
    for (auto& m : net.w) m = get_mat();
    for (auto& v : net.b) v = get_vec();
    return net;
  }
  AdamOpt get_adam() {
    AdamOpt opt;
    opt.t_ = get_i64();
    const int64_t n = get_i64();
    opt.m_.resize(n);
    opt.v_.resize(n);
    for (auto& v : opt.m_) v = get_vec();
    for (auto& v : opt.v_) v = get_vec();
    return opt;
  }

 private:
  std::ifstream in_;
};

}  // namespace manip2d
