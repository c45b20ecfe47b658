#include "lirdrec/container.hpp"

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "lirdrec/errors.hpp"

namespace lirdrec {

namespace {

const std::array<uint32_t, 256>& crc_table() {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw FormatError("cannot open for writing: " + path);
  }
  void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), n); }
  void u32(uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    bytes(b, 4);
  }
  void u64(uint64_t v) {
    u32(static_cast<uint32_t>(v));
    u32(static_cast<uint32_t>(v >> 32));
  }
  void f32_array(const float* p, size_t n) {
    static_assert(sizeof(float) == 4);
    bytes(p, n * 4);
  }
  void close(const std::string& path) {
    out_.flush();
    if (!out_) throw FormatError("write failed: " + path);
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open: " + path);
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), n);
    if (static_cast<size_t>(in_.gcount()) != n)
      throw FormatError("truncated payload in " + path_);
  }
  uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
  uint64_t u64() {
    const uint64_t lo = u32();
    return lo | (static_cast<uint64_t>(u32()) << 32);
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

void expect_magic(Reader& r, const char* magic) {
  char got[4];
  r.bytes(got, 4);
  if (std::memcmp(got, magic, 4) != 0)
    throw FormatError("bad magic in " + r.path() + " (expected " + magic + ")");
}

// Array payloads are written raw; the on-disk format is little-endian.
static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

}  // namespace

uint32_t crc32(const void* data, size_t n) {
  const auto& t = crc_table();
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint32_t c = 0xffffffffu;
  for (size_t i = 0; i < n; ++i) c = t[(c ^ p[i]) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

uint64_t fnv1a64_bytes(const void* data, size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a64(std::string_view s) { return fnv1a64_bytes(s.data(), s.size()); }

uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const auto n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

void store_features(const FeatureMatrix& m, const std::string& path) {
  Writer w(path);
  w.bytes("FMX1", 4);
  w.u32(static_cast<uint32_t>(m.rows()));
  w.u32(static_cast<uint32_t>(m.cols()));
  w.u64(fnv1a64(m.modality_id));
  w.f32_array(m.values.data(), m.values.size());
  w.u32(crc32(m.values.data(), m.values.size() * 4));
  w.close(path);
}

FeatureMatrix load_features(const std::string& path, const std::string& expected_modality) {
  Reader r(path);
  expect_magic(r, "FMX1");
  const uint32_t rows = r.u32();
  const uint32_t cols = r.u32();
  const uint64_t tag = r.u64();
  FeatureMatrix m;
  m.values = Tensor<float>(rows, cols);
  r.bytes(m.values.data(), m.values.size() * 4);
  const uint32_t stored = r.u32();
  if (stored != crc32(m.values.data(), m.values.size() * 4))
    throw FormatError("checksum mismatch in " + path);
  if (!m.values.all_finite()) throw FormatError("NaN/Inf values in " + path);
  if (!expected_modality.empty()) {
    if (tag != fnv1a64(expected_modality))
      throw FormatError("modality tag mismatch in " + path + " (expected '" +
                        expected_modality + "')");
    m.modality_id = expected_modality;
  } else {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(tag));
    m.modality_id = hex;
  }
  return m;
}

void store_graph(const Csr<float>& g, uint64_t tag, const std::string& path) {
  Writer w(path);
  w.bytes("GRX1", 4);
  w.u32(static_cast<uint32_t>(g.rows));
  w.u32(static_cast<uint32_t>(g.cols));
  w.u64(tag);
  w.u32(static_cast<uint32_t>(g.nnz()));
  uint32_t crc = 0xffffffffu;
  auto feed = [&crc](const void* p, size_t n) {
    const auto& t = crc_table();
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) crc = t[(crc ^ b[i]) & 0xff] ^ (crc >> 8);
  };
  w.bytes(g.indptr.data(), g.indptr.size() * 4);
  feed(g.indptr.data(), g.indptr.size() * 4);
  w.bytes(g.indices.data(), g.indices.size() * 4);
  feed(g.indices.data(), g.indices.size() * 4);
  w.f32_array(g.data.data(), g.data.size());
  feed(g.data.data(), g.data.size() * 4);
  w.u32(crc ^ 0xffffffffu);
  w.close(path);
}

Csr<float> load_graph(const std::string& path, uint64_t* tag_out) {
  Reader r(path);
  expect_magic(r, "GRX1");
  Csr<float> g;
  g.rows = r.u32();
  g.cols = r.u32();
  const uint64_t tag = r.u64();
  const uint32_t nnz = r.u32();
  g.indptr.resize(g.rows + 1);
  g.indices.resize(nnz);
  g.data.resize(nnz);
  r.bytes(g.indptr.data(), g.indptr.size() * 4);
  r.bytes(g.indices.data(), g.indices.size() * 4);
  r.bytes(g.data.data(), g.data.size() * 4);
  uint32_t crc = 0xffffffffu;
  auto feed = [&crc](const void* p, size_t n) {
    const auto& t = crc_table();
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) crc = t[(crc ^ b[i]) & 0xff] ^ (crc >> 8);
  };
  feed(g.indptr.data(), g.indptr.size() * 4);
  feed(g.indices.data(), g.indices.size() * 4);
  feed(g.data.data(), g.data.size() * 4);
  if ((crc ^ 0xffffffffu) != r.u32()) throw FormatError("checksum mismatch in " + path);
  if (g.indptr.back() != nnz) throw FormatError("inconsistent indptr in " + path);
  if (tag_out != nullptr) *tag_out = tag;
  return g;
}

void store_sections(const std::vector<NamedTensor>& sections, const std::string& path) {
  Writer w(path);
  w.bytes("CKP1", 4);
  w.u32(static_cast<uint32_t>(sections.size()));
  for (const auto& s : sections) {
    w.u32(static_cast<uint32_t>(s.name.size()));
    w.bytes(s.name.data(), s.name.size());
    w.u32(static_cast<uint32_t>(s.data.rows()));
    w.u32(static_cast<uint32_t>(s.data.cols()));
    w.f32_array(s.data.data(), s.data.size());
    w.u32(crc32(s.data.data(), s.data.size() * 4));
  }
  w.close(path);
}

std::vector<NamedTensor> load_sections(const std::string& path) {
  Reader r(path);
  expect_magic(r, "CKP1");
  const uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor s;
    const uint32_t len = r.u32();
    if (len > (1u << 20)) throw FormatError("implausible section name length in " + path);
    s.name.resize(len);
    r.bytes(s.name.data(), len);
    const uint32_t rows = r.u32();
    const uint32_t cols = r.u32();
    s.data = Tensor<float>(rows, cols);
    r.bytes(s.data.data(), s.data.size() * 4);
    if (r.u32() != crc32(s.data.data(), s.data.size() * 4))
      throw FormatError("checksum mismatch in section '" + s.name + "' of " + path);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace lirdrec
