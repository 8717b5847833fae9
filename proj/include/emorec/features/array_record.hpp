// Copyright (c) 2026 The emorec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary container for named numeric arrays. Used for feature-cache records,
// model checkpoints and remote model responses.
//
// Layout (all integers little-endian):
//   magic        8 bytes  "EMOARR\0\1"
//   version      u32      kArrayRecordVersion
//   fingerprint  u32 length + UTF-8 bytes (extractor / model fingerprint)
//   metadata     u32 length + UTF-8 JSON text
//   n_arrays     u32
//   per array:   u16 name length, name bytes, u8 dtype (0 = f32, 1 = i32),
//                u8 ndim, ndim x u64 dims, u64 payload offset, u64 byte length
//   payload_len  u64
//   checksum     u64 FNV-1a over the payload bytes
//   payload      32-bit little-endian elements, arrays in table order

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "emorec/common/error.hpp"
#include "emorec/common/hash.hpp"
#include "json.hpp"

namespace emorec {

inline constexpr std::uint32_t kArrayRecordVersion = 1;
inline constexpr char kArrayRecordMagic[8] = {'E', 'M', 'O', 'A', 'R', 'R', '\0', '\1'};

enum class DType : std::uint8_t { kFloat32 = 0, kInt32 = 1 };

struct NamedArray {
  std::string name;
  DType dtype = DType::kFloat32;
  std::vector<std::int64_t> shape;
  std::vector<float> f32;
  std::vector<std::int32_t> i32;

  std::int64_t element_count() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }

  static NamedArray floats(std::string name, std::vector<std::int64_t> shape,
                           std::vector<float> data) {
    NamedArray a;
    a.name = std::move(name);
    a.dtype = DType::kFloat32;
    a.shape = std::move(shape);
    a.f32 = std::move(data);
    return a;
  }
  static NamedArray ints(std::string name, std::vector<std::int64_t> shape,
                         std::vector<std::int32_t> data) {
    NamedArray a;
    a.name = std::move(name);
    a.dtype = DType::kInt32;
    a.shape = std::move(shape);
    a.i32 = std::move(data);
    return a;
  }
};

struct ArrayRecord {
  std::string fingerprint;
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  }
  const NamedArray& at(const std::string& name) const {
    if (const NamedArray* a = find(name)) return *a;
    throw CacheError(CacheError::Kind::kCorrupt, "record has no array '" + name + "'");
  }
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<std::byte>(v)); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void str32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::byte>& buffer() { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
  }
  std::vector<std::byte> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> data) : data_(data) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::span<const std::byte> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str(std::size_t n) {
    auto s = take(n);
    return std::string(reinterpret_cast<const char*>(s.data()), s.size());
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_)
      throw CacheError(CacheError::Kind::kCorrupt, "truncated array record");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(data_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::byte> encode_record(const ArrayRecord& rec) {
  detail::ByteWriter payload;
  std::vector<std::uint64_t> offsets, lengths;
  for (const auto& a : rec.arrays) {
    const std::int64_t n = a.element_count();
    const std::size_t have = a.dtype == DType::kFloat32 ? a.f32.size() : a.i32.size();
    if (static_cast<std::int64_t>(have) != n)
      throw UsageError("array '" + a.name + "' data size does not match its shape");
    offsets.push_back(payload.buffer().size());
    if constexpr (std::endian::native == std::endian::little) {
      if (a.dtype == DType::kFloat32)
        payload.bytes(a.f32.data(), a.f32.size() * 4);
      else
        payload.bytes(a.i32.data(), a.i32.size() * 4);
      lengths.push_back(payload.buffer().size() - offsets.back());
      continue;
    }
    for (std::int64_t i = 0; i < n; ++i) {
      const std::uint32_t bits =
          a.dtype == DType::kFloat32
              ? std::bit_cast<std::uint32_t>(a.f32[static_cast<std::size_t>(i)])
              : std::bit_cast<std::uint32_t>(a.i32[static_cast<std::size_t>(i)]);
      payload.u32(bits);
    }
    lengths.push_back(payload.buffer().size() - offsets.back());
  }

  detail::ByteWriter w;
  w.bytes(kArrayRecordMagic, sizeof(kArrayRecordMagic));
  w.u32(kArrayRecordVersion);
  w.str32(rec.fingerprint);
  w.str32(rec.metadata.dump());
  w.u32(static_cast<std::uint32_t>(rec.arrays.size()));
  for (std::size_t k = 0; k < rec.arrays.size(); ++k) {
    const auto& a = rec.arrays[k];
    w.u16(static_cast<std::uint16_t>(a.name.size()));
    w.bytes(a.name.data(), a.name.size());
    w.u8(static_cast<std::uint8_t>(a.dtype));
    w.u8(static_cast<std::uint8_t>(a.shape.size()));
    for (auto d : a.shape) w.u64(static_cast<std::uint64_t>(d));
    w.u64(offsets[k]);
    w.u64(lengths[k]);
  }
  const auto& pb = payload.buffer();
  w.u64(pb.size());
  w.u64(fnv1a64(std::span<const std::byte>(pb.data(), pb.size())));
  w.bytes(pb.data(), pb.size());
  return std::move(w.buffer());
}

inline ArrayRecord decode_record(std::span<const std::byte> data) {
  using K = CacheError::Kind;
  detail::ByteReader r(data);
  auto magic = r.take(sizeof(kArrayRecordMagic));
  if (std::memcmp(magic.data(), kArrayRecordMagic, sizeof(kArrayRecordMagic)) != 0)
    throw CacheError(K::kCorrupt, "bad array record magic");
  const std::uint32_t version = r.u32();
  if (version != kArrayRecordVersion)
    throw CacheError(K::kStale, "unsupported array record version " + std::to_string(version));
  ArrayRecord rec;
  rec.fingerprint = r.str(r.u32());
  const std::string meta = r.str(r.u32());
  try {
    rec.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw CacheError(K::kCorrupt, std::string("bad record metadata: ") + e.what());
  }
  const std::uint32_t n = r.u32();
  struct Entry {
    std::uint64_t offset, length;
  };
  std::vector<Entry> entries;
  for (std::uint32_t k = 0; k < n; ++k) {
    NamedArray a;
    a.name = r.str(r.u16());
    const std::uint8_t dt = r.u8();
    if (dt > 1) throw CacheError(K::kCorrupt, "unknown dtype in record");
    a.dtype = static_cast<DType>(dt);
    const std::uint8_t ndim = r.u8();
    for (std::uint8_t i = 0; i < ndim; ++i) a.shape.push_back(static_cast<std::int64_t>(r.u64()));
    entries.push_back({r.u64(), r.u64()});
    if (entries.back().length != static_cast<std::uint64_t>(a.element_count()) * 4)
      throw CacheError(K::kCorrupt, "array '" + a.name + "' length does not match its shape");
    rec.arrays.push_back(std::move(a));
  }
  const std::uint64_t payload_len = r.u64();
  const std::uint64_t checksum = r.u64();
  if (payload_len != r.remaining())
    throw CacheError(K::kCorrupt, "array record payload length mismatch");
  auto payload = r.take(payload_len);
  if (fnv1a64(payload) != checksum)
    throw CacheError(K::kCorrupt, "array record checksum mismatch");
  for (std::size_t k = 0; k < rec.arrays.size(); ++k) {
    auto& a = rec.arrays[k];
    if (entries[k].offset + entries[k].length > payload_len)
      throw CacheError(K::kCorrupt, "array '" + a.name + "' outside payload");
    detail::ByteReader pr(payload.subspan(entries[k].offset, entries[k].length));
    const auto count = static_cast<std::size_t>(a.element_count());
    if constexpr (std::endian::native == std::endian::little) {
      const std::byte* src = payload.data() + entries[k].offset;
      if (a.dtype == DType::kFloat32) {
        a.f32.resize(count);
        std::memcpy(a.f32.data(), src, count * 4);
      } else {
        a.i32.resize(count);
        std::memcpy(a.i32.data(), src, count * 4);
      }
      continue;
    }
    if (a.dtype == DType::kFloat32) {
      a.f32.resize(count);
      for (auto& v : a.f32) v = std::bit_cast<float>(pr.u32());
    } else {
      a.i32.resize(count);
      for (auto& v : a.i32) v = std::bit_cast<std::int32_t>(pr.u32());
    }
  }
  return rec;
}

// Writes to a temporary sibling first and renames, so readers never observe a
// partially written record.
inline void write_record_file(const std::filesystem::path& path, const ArrayRecord& rec) {
  namespace fs = std::filesystem;
  const auto bytes = encode_record(rec);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(fnv1a64(path.string()) & 0xffff);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CacheError(CacheError::Kind::kIo, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CacheError(CacheError::Kind::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError(CacheError::Kind::kNotFound, "no such record: " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  return bytes;
}

inline ArrayRecord read_record_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_record(std::span<const std::byte>(bytes.data(), bytes.size()));
}

}  // namespace emorec
