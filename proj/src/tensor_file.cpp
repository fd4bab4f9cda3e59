#include "schurgan/tensor_file.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace schurgan::io {

namespace {

struct Out {
  std::ofstream f;
  explicit Out(const std::string& path) : f(path, std::ios::binary) {
    if (!f) throw std::runtime_error("cannot write " + path);
  }
  void raw(const void* p, std::size_t n) {
    f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
};

struct In {
  std::ifstream f;
  explicit In(const std::string& path) : f(path, std::ios::binary) {
    if (!f) throw std::runtime_error("cannot open " + path);
  }
  void raw(void* p, std::size_t n) {
    f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (f.gcount() != static_cast<std::streamsize>(n))
      throw std::runtime_error("truncated tensor file");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint16_t u16() {
    std::uint16_t v;
    raw(&v, 2);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw std::runtime_error("tensor file: oversized string field");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
};

TensorFile read_impl(const std::string& path, bool with_payload) {
  In in(path);
  char magic[4];
  in.raw(magic, 4);
  if (std::memcmp(magic, "DFNT", 4) != 0)
    throw std::runtime_error("not a tensor file: " + path);
  const std::uint32_t version = in.u32();
  if (version != 1) throw std::runtime_error("unsupported tensor version: " + path);

  TensorFile t;
  t.config_hash = in.u64();
  t.seed = in.u64();
  const std::uint8_t dtype = in.u8();
  if (dtype != 0) throw std::runtime_error("unsupported tensor dtype: " + path);
  t.scale_kind = static_cast<sig::ScaleKind>(in.u8());
  const std::uint16_t ndim = in.u16();
  if (ndim > 4) throw std::runtime_error("tensor file: too many dims");
  std::size_t count = 1;
  for (std::uint16_t i = 0; i < ndim; ++i) {
    t.dims.push_back(in.u32());
    count *= t.dims.back();
  }
  t.sample_rate = in.f64();
  t.frame_hop = in.u32();
  const std::uint32_t nf = in.u32();
  if (nf > (1u << 20)) throw std::runtime_error("tensor file: oversized frequency table");
  t.scale_frequencies.resize(nf);
  for (std::uint32_t i = 0; i < nf; ++i) t.scale_frequencies[i] = in.f64();
  t.source_id = in.str();
  t.phase_ref = in.str();
  if (with_payload) {
    if (count > (1u << 28)) throw std::runtime_error("tensor file: oversized payload");
    t.data.resize(count);
    in.raw(t.data.data(), count * sizeof(float));
  }
  return t;
}

}  // namespace

Matrix TensorFile::as_matrix() const {
  if (dims.size() != 2) throw std::runtime_error("tensor is not 2-D");
  Matrix m(dims[0], dims[1]);
  if (data.size() != m.data().size()) throw std::runtime_error("tensor payload size mismatch");
  for (std::size_t i = 0; i < data.size(); ++i) m.data()[i] = static_cast<double>(data[i]);
  return m;
}

void TensorFile::set_matrix(const Matrix& m) {
  dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  data.resize(m.data().size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(m.data()[i]);
}

void write_tensor(const std::string& path, const TensorFile& t) {
  std::size_t count = 1;
  for (std::uint32_t d : t.dims) count *= d;
  if (count != t.data.size()) throw std::invalid_argument("tensor dims/payload mismatch");
  Out out(path);
  out.raw("DFNT", 4);
  out.u32(1);
  out.u64(t.config_hash);
  out.u64(t.seed);
  out.u8(0);  // f32
  out.u8(static_cast<std::uint8_t>(t.scale_kind));
  out.u16(static_cast<std::uint16_t>(t.dims.size()));
  for (std::uint32_t d : t.dims) out.u32(d);
  out.f64(t.sample_rate);
  out.u32(t.frame_hop);
  out.u32(static_cast<std::uint32_t>(t.scale_frequencies.size()));
  for (double f : t.scale_frequencies) out.f64(f);
  out.str(t.source_id);
  out.str(t.phase_ref);
  out.raw(t.data.data(), t.data.size() * sizeof(float));
}

TensorFile read_tensor(const std::string& path) { return read_impl(path, true); }

TensorFile read_tensor_header(const std::string& path) { return read_impl(path, false); }

}  // namespace schurgan::io
