//
// Copyright 2026 The FairAudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Binary model container.
//
//   offset  field
//   0       magic "FAUDMLP\0" (8 bytes)
//   8       u32 format version
//   12      u64 initialization / training seed
//   20      u32 layer count L, then L x u32 layer sizes
//   ...     u64 parameter count P, then P x f64 parameters (row-major, W_0 b_0
//           W_1 b_1 ...)
//   end-4   u32 CRC-32 of every preceding byte
//
// All integers and IEEE-754 doubles are little-endian.

#ifndef FAIRAUDIT_MODEL_IO_H_
#define FAIRAUDIT_MODEL_IO_H_

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "fairaudit/error.h"
#include "fairaudit/nn.h"

namespace fairaudit {

inline constexpr uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[8] = {'F', 'A', 'U', 'D', 'M', 'L', 'P', '\0'};

inline uint32_t Crc32(const uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, data, static_cast<uInt>(size));
  return static_cast<uint32_t>(crc);
}

namespace internal {

class ByteWriter {
 public:
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void U64(uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void F64(double v) { U64(std::bit_cast<uint64_t>(v)); }
  void Raw(const char* data, std::size_t size) { bytes_.insert(bytes_.end(), data, data + size); }
  std::vector<uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<uint8_t>& bytes, std::size_t end)
      : bytes_(bytes), end_(end) {}
  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  uint64_t U64() {
    Need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double F64() { return std::bit_cast<double>(U64()); }
  std::size_t remaining() const { return end_ - pos_; }
  void Skip(std::size_t n) {
    Need(n);
    pos_ += n;
  }

 private:
  void Need(std::size_t n) {
    Require(pos_ + n <= end_, ErrorKind::kIntegrity, "model payload truncated");
  }
  const std::vector<uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace internal

inline std::vector<uint8_t> EncodeModel(const MlpModel& model,
                                        uint32_t version = kModelFormatVersion) {
  internal::ByteWriter w;
  w.Raw(kModelMagic, sizeof(kModelMagic));
  w.U32(version);
  w.U64(model.seed);
  w.U32(static_cast<uint32_t>(model.layer_sizes.size()));
  for (int size : model.layer_sizes) w.U32(static_cast<uint32_t>(size));
  const std::vector<double> flat = model.params.Flatten();
  w.U64(flat.size());
  for (double v : flat) w.F64(v);
  const uint32_t crc = Crc32(w.bytes().data(), w.bytes().size());
  w.U32(crc);
  return std::move(w.bytes());
}

inline MlpModel DecodeModel(const std::vector<uint8_t>& bytes) {
  Require(bytes.size() >= sizeof(kModelMagic) + 8 &&
              std::equal(std::begin(kModelMagic), std::end(kModelMagic), bytes.begin()),
          ErrorKind::kIntegrity, "not a model container (bad magic)");
  const std::size_t body = bytes.size() - 4;
  uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<uint32_t>(bytes[body + i]) << (8 * i);
  Require(stored == Crc32(bytes.data(), body), ErrorKind::kIntegrity,
          "model checksum mismatch (corrupted payload)");

  internal::ByteReader r(bytes, body);
  r.Skip(sizeof(kModelMagic));
  const uint32_t version = r.U32();
  Require(version == kModelFormatVersion, ErrorKind::kCompatibility,
          "model format version " + std::to_string(version) +
              " is not supported (this build reads version " +
              std::to_string(kModelFormatVersion) + ")");
  MlpModel model;
  model.seed = r.U64();
  const uint32_t layer_count = r.U32();
  Require(layer_count >= 2 && layer_count <= 64, ErrorKind::kIntegrity,
          "implausible layer count in model container");
  for (uint32_t i = 0; i < layer_count; ++i) {
    model.layer_sizes.push_back(static_cast<int>(r.U32()));
  }
  internal::ValidateLayerSizes(model.layer_sizes, -1);
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    model.params.weights.push_back(Matrix::Zero(model.layer_sizes[l + 1], model.layer_sizes[l]));
    model.params.biases.push_back(Vector::Zero(model.layer_sizes[l + 1]));
  }
  const uint64_t count = r.U64();
  Require(count == model.params.Count(), ErrorKind::kIntegrity,
          "parameter count does not match layer sizes");
  std::vector<double> flat(count);
  for (auto& v : flat) v = r.F64();
  Require(r.remaining() == 0, ErrorKind::kIntegrity, "trailing bytes in model container");
  model.params.Unflatten(flat);
  return model;
}

// Writes to a temporary sibling and renames it into place.
inline void WriteFileAtomic(const std::string& path, const std::vector<uint8_t>& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    Require(out.good(), ErrorKind::kIo, "cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    Require(out.good(), ErrorKind::kIo, "failed writing file: " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  Require(!ec, ErrorKind::kIo, "cannot move file into place: " + path);
}

inline void WriteFileAtomic(const std::string& path, const std::string& text) {
  WriteFileAtomic(path, std::vector<uint8_t>(text.begin(), text.end()));
}

inline std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), ErrorKind::kIo, "cannot open file: " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void SaveModel(const MlpModel& model, const std::string& path) {
  WriteFileAtomic(path, EncodeModel(model));
}

inline MlpModel LoadModel(const std::string& path) { return DecodeModel(ReadFileBytes(path)); }

}  // namespace fairaudit

#endif  // FAIRAUDIT_MODEL_IO_H_
