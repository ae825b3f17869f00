#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

namespace dsn {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

// %.17g, enough digits to round-trip a double exactly.
std::string format_double(double v);

std::string read_file_bytes(const std::string& path);

// Writes content to a temp file next to `path`, then renames over it.
void atomic_write_file(const std::string& path, std::string_view content);

// Little-endian binary buffer builder for the dataset/checkpoint formats.
class ByteWriter {
 public:
  void raw(const void* src, std::size_t n);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v);
  void f64(double v);
  void str(std::string_view s);  // u32 length prefix + bytes
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

// Cursor over an in-memory file image; throws FormatError with the byte
// offset of the first missing or offending byte.
class ByteReader {
 public:
  explicit ByteReader(std::string_view buf) : buf_(buf) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32();
  double f64();
  std::string str();
  void expect_magic(std::string_view magic, const char* what);

  std::size_t offset() const { return off_; }
  bool at_end() const { return off_ == buf_.size(); }
  [[noreturn]] void fail(const std::string& msg) const;

 private:
  void need(std::size_t n);
  std::string_view buf_;
  std::size_t off_ = 0;
};

}  // namespace dsn
