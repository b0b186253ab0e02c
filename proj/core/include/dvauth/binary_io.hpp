#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace dvauth::io {

// Little-endian encoder for checkpoint and interchange files.
class ByteWriter {
 public:
  void magic(std::string_view tag);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void f32(float v);
  void f32_span(std::span<const float> values);

  // Row-major dump of a float matrix.
  void matrix(const Eigen::MatrixXf& m);
  void vector(const Eigen::VectorXf& v);

  const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }
  void write_file(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian decoder. Every read past the end throws
// FormatError naming `context`.
class ByteReader {
 public:
  ByteReader(std::vector<std::uint8_t> bytes, std::string context);
  static ByteReader from_file(const std::filesystem::path& path);

  void expect_magic(std::string_view tag);
  std::uint8_t u8();
  std::uint32_t u32();
  float f32();
  Eigen::MatrixXf matrix(std::size_t rows, std::size_t cols);
  Eigen::VectorXf vector(std::size_t n);

  std::size_t remaining() const noexcept { return buf_.size() - pos_; }
  void expect_end() const;

 private:
  void need(std::size_t n) const;

  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_text(const std::filesystem::path& path, std::string_view text);

}  // namespace dvauth::io
