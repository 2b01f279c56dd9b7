#pragma once

#include "gale/common.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>

namespace gale {

// Flat named-tensor file: magic, version, count, then per tensor a name,
// a shape header, and row-major 64-bit floats. All integers and floats are
// written little-endian byte by byte, independent of host order.
class Checkpoint {
 public:
  void put(const std::string& name, const Matrix& m) {
    entries_[name] = Entry{2, static_cast<uint64_t>(m.rows()), static_cast<uint64_t>(m.cols()), m};
  }

  void put(const std::string& name, const Vector& v) {
    Entry e{1, static_cast<uint64_t>(v.size()), 1, Matrix(v)};
    entries_[name] = std::move(e);
  }

  void put(const std::string& name, double scalar) {
    entries_[name] = Entry{0, 1, 1, Matrix::Constant(1, 1, scalar)};
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  Matrix matrix(const std::string& name) const {
    const Entry& e = find(name, 2);
    return e.data;
  }

  Vector vector(const std::string& name) const {
    const Entry& e = find(name, 1);
    return e.data.col(0);
  }

  double scalar(const std::string& name) const {
    const Entry& e = find(name, 0);
    return e.data(0, 0);
  }

  size_t size() const { return entries_.size(); }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    write_u64(out, kVersion);
    write_u64(out, entries_.size());
    for (const auto& [name, e] : entries_) {
      write_u64(out, name.size());
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_u64(out, e.rank);
      write_u64(out, e.rows);
      write_u64(out, e.cols);
      for (uint64_t r = 0; r < e.rows; ++r)
        for (uint64_t c = 0; c < e.cols; ++c)
          write_u64(out, std::bit_cast<uint64_t>(e.data(static_cast<Eigen::Index>(r),
                                                        static_cast<Eigen::Index>(c))));
    }
    if (!out) throw input_error("short write to checkpoint: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
      throw input_error(path + ": not a checkpoint file");
    if (read_u64(in, path) != kVersion) throw input_error(path + ": unsupported version");
    uint64_t count = read_u64(in, path);
    Checkpoint ck;
    for (uint64_t t = 0; t < count; ++t) {
      uint64_t name_len = read_u64(in, path);
      std::string name(name_len, '\0');
      in.read(name.data(), static_cast<std::streamsize>(name_len));
      Entry e;
      e.rank = read_u64(in, path);
      e.rows = read_u64(in, path);
      e.cols = read_u64(in, path);
      if (e.rank > 2 || e.rows == 0 || e.cols == 0)
        throw input_error(path + ": malformed shape for tensor \"" + name + "\"");
      e.data.resize(static_cast<Eigen::Index>(e.rows), static_cast<Eigen::Index>(e.cols));
      for (uint64_t r = 0; r < e.rows; ++r)
        for (uint64_t c = 0; c < e.cols; ++c)
          e.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
              std::bit_cast<double>(read_u64(in, path));
      ck.entries_[name] = std::move(e);
    }
    return ck;
  }

 private:
  struct Entry {
    uint64_t rank = 2;
    uint64_t rows = 0;
    uint64_t cols = 0;
    Matrix data;
  };

  static constexpr const char* kMagic = "GALETNSR";
  static constexpr uint64_t kVersion = 1;

  const Entry& find(const std::string& name, uint64_t rank) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw input_error("checkpoint lacks tensor \"" + name + "\"");
    if (it->second.rank != rank)
      throw input_error(strf("checkpoint tensor \"%s\" has rank %d, wanted %d", name.c_str(),
                             static_cast<int>(it->second.rank), static_cast<int>(rank)));
    return it->second;
  }

  static void write_u64(std::ostream& out, uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 8);
  }

  static uint64_t read_u64(std::istream& in, const std::string& path) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw input_error(path + ": truncated checkpoint");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[i]) << (8 * i);
    return v;
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace gale
