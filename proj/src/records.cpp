#include "slowfast/records.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "slowfast/errors.hpp"

namespace slowfast {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'F', 'R', 'E', 'C', '\0', '\0', '\0'};

}  // namespace

RecordWriter::RecordWriter(std::ostream& out, RecordKind kind) : out_(out) {
  out_.write(kMagic.data(), kMagic.size());
  u32(kRecordVersion);
  u32(static_cast<std::uint32_t>(kind));
}

void RecordWriter::u32(std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out_.write(reinterpret_cast<const char*>(b), 4);
}

void RecordWriter::u64(std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out_.write(reinterpret_cast<const char*>(b), 8);
}

void RecordWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void RecordWriter::matrix(const Eigen::MatrixXd& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
}

RecordReader::RecordReader(std::istream& in, RecordKind kind) : in_(in) {
  std::array<char, 8> magic{};
  in_.read(magic.data(), magic.size());
  if (!in_ || magic != kMagic) throw StructuralError("not a slowfast binary record");
  const auto version = u32();
  if (version != kRecordVersion) throw StructuralError("unsupported record version");
  const auto k = u32();
  if (k != static_cast<std::uint32_t>(kind)) throw StructuralError("record holds a different kind of data");
}

std::uint32_t RecordReader::u32() {
  unsigned char b[4];
  in_.read(reinterpret_cast<char*>(b), 4);
  if (!in_) throw StructuralError("truncated record");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t RecordReader::u64() {
  unsigned char b[8];
  in_.read(reinterpret_cast<char*>(b), 8);
  if (!in_) throw StructuralError("truncated record");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double RecordReader::f64() { return std::bit_cast<double>(u64()); }

Eigen::MatrixXd RecordReader::matrix() {
  const auto rows = u64();
  const auto cols = u64();
  if (rows > (1u << 20) || cols > (1ull << 32)) throw StructuralError("record matrix too large");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f64();
  return m;
}

}  // namespace slowfast
