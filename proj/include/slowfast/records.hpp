#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>

namespace slowfast {

// Flat binary record: 8-byte magic "SFREC\0\0\0", u32 version, u32 kind, then
// little-endian fields. Matrices are (rows u64, cols u64, column-major f64).
enum class RecordKind : std::uint32_t { NoisePath = 1, Trajectory = 2 };

inline constexpr std::uint32_t kRecordVersion = 1;

class RecordWriter {
 public:
  RecordWriter(std::ostream& out, RecordKind kind);

  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void matrix(const Eigen::MatrixXd& m);

 private:
  std::ostream& out_;
};

class RecordReader {
 public:
  RecordReader(std::istream& in, RecordKind kind);

  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  Eigen::MatrixXd matrix();

 private:
  std::istream& in_;
};

}  // namespace slowfast
