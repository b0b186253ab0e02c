#include "dvauth/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "dvauth/error.hpp"

namespace dvauth::io {

static_assert(std::numeric_limits<float>::is_iec559, "IEEE-754 floats required");

void ByteWriter::magic(std::string_view tag) {
  buf_.insert(buf_.end(), tag.begin(), tag.end());
}

void ByteWriter::u8(std::uint8_t v) { buf_.push_back(v); }

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    buf_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFFu));
  }
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f32_span(std::span<const float> values) {
  buf_.reserve(buf_.size() + 4 * values.size());
  for (float v : values) f32(v);
}

void ByteWriter::matrix(const Eigen::MatrixXf& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) f32(m(r, c));
  }
}

void ByteWriter::vector(const Eigen::VectorXf& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) f32(v[i]);
}

void ByteWriter::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(buf_.data()),
            static_cast<std::streamsize>(buf_.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ByteReader::ByteReader(std::vector<std::uint8_t> bytes, std::string context)
    : buf_(std::move(bytes)), context_(std::move(context)) {}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  return ByteReader(read_file_bytes(path), path.string());
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) {
    throw FormatError(context_ + ": truncated (needed " + std::to_string(n) +
                      " bytes at offset " + std::to_string(pos_) + ")");
  }
}

void ByteReader::expect_magic(std::string_view tag) {
  need(tag.size());
  if (std::memcmp(buf_.data() + pos_, tag.data(), tag.size()) != 0) {
    throw FormatError(context_ + ": bad magic, expected '" + std::string(tag) + "'");
  }
  pos_ += tag.size();
}

std::uint8_t ByteReader::u8() {
  need(1);
  return buf_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
  }
  pos_ += 4;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

Eigen::MatrixXf ByteReader::matrix(std::size_t rows, std::size_t cols) {
  need(rows * cols * 4);
  Eigen::MatrixXf m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f32();
  }
  return m;
}

Eigen::VectorXf ByteReader::vector(std::size_t n) {
  need(n * 4);
  Eigen::VectorXf v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f32();
  return v;
}

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    throw FormatError(context_ + ": " + std::to_string(remaining()) + " trailing bytes");
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace dvauth::io
