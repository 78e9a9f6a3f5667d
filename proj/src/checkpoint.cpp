#include "rgl/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace rgl {

namespace {

constexpr char kMagic[8] = {'R', 'G', 'L', 'C', 'K', 'P', 'T', '\n'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw CheckpointError("truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t(std::uint8_t(buf[pos + std::size_t(i)])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= std::uint64_t(std::uint8_t(buf[pos + std::size_t(i)])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  std::string out;
  out.append(kMagic, 8);
  put_u32(out, kVersion);
  put_u32(out, std::uint32_t(data.header_text.size()));
  out += data.header_text;
  put_u32(out, std::uint32_t(data.tensors.size()));
  for (const auto& [name, t] : data.tensors) {
    put_u32(out, std::uint32_t(name.size()));
    out += name;
    put_u32(out, std::uint32_t(t.shape().size()));
    for (long d : t.shape()) put_u64(out, std::uint64_t(d));
    for (double v : t.data()) put_f64(out, v);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open for write: " + path);
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw CheckpointError("write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  Reader r{buf};
  if (r.bytes(8) != std::string(kMagic, 8))
    throw CheckpointError("bad magic: " + path);
  std::uint32_t version = r.u32();
  if (version != kVersion)
    throw CheckpointError("unsupported version " + std::to_string(version));

  CheckpointData data;
  data.header_text = r.bytes(r.u32());
  std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.u32());
    std::uint32_t ndim = r.u32();
    std::vector<long> shape;
    long numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      shape.push_back(long(r.u64()));
      numel *= shape.back();
    }
    std::vector<double> values(static_cast<std::size_t>(numel));
    for (long j = 0; j < numel; ++j) values[std::size_t(j)] = r.f64();
    data.tensors.emplace_back(name,
                              Tensor::from_data(std::move(shape), std::move(values)));
  }
  return data;
}

}  // namespace rgl
