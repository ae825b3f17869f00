#include "dsn/io_util.hpp"

#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "dsn/error.hpp"

namespace dsn {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path);
  return bytes;
}

void atomic_write_file(const std::string& path, std::string_view content) {
  std::string tmp = path + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed on " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("rename failed: " + tmp + " -> " + path);
  }
}

void ByteWriter::raw(const void* src, std::size_t n) {
  buf_.append(static_cast<const char*>(src), n);
}

void ByteWriter::u8(std::uint8_t v) { raw(&v, 1); }
void ByteWriter::u32(std::uint32_t v) { raw(&v, 4); }
void ByteWriter::u64(std::uint64_t v) { raw(&v, 8); }
void ByteWriter::i32(std::int32_t v) { raw(&v, 4); }
void ByteWriter::f64(double v) { raw(&v, 8); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  raw(s.data(), s.size());
}

void ByteReader::need(std::size_t n) {
  if (buf_.size() - off_ < n) {
    throw FormatError("unexpected end of file", buf_.size());
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  std::uint8_t v = static_cast<std::uint8_t>(buf_[off_]);
  off_ += 1;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, buf_.data() + off_, 4);
  off_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v;
  std::memcpy(&v, buf_.data() + off_, 8);
  off_ += 8;
  return v;
}

std::int32_t ByteReader::i32() {
  need(4);
  std::int32_t v;
  std::memcpy(&v, buf_.data() + off_, 4);
  off_ += 4;
  return v;
}

double ByteReader::f64() {
  need(8);
  double v;
  std::memcpy(&v, buf_.data() + off_, 8);
  off_ += 8;
  return v;
}

std::string ByteReader::str() {
  std::uint32_t n = u32();
  need(n);
  std::string s(buf_.substr(off_, n));
  off_ += n;
  return s;
}

void ByteReader::expect_magic(std::string_view magic, const char* what) {
  std::size_t at = off_;
  need(magic.size());
  if (buf_.substr(off_, magic.size()) != magic) {
    throw FormatError(std::string("bad ") + what + " magic, expected \"" +
                          std::string(magic) + "\"",
                      at);
  }
  off_ += magic.size();
}

void ByteReader::fail(const std::string& msg) const {
  throw FormatError(msg, off_);
}

}  // namespace dsn
