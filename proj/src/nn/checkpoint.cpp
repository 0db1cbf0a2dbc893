#include "pushgrasp/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pushgrasp::nn {

namespace {

constexpr char kMagic[8] = {'P', 'G', 'C', 'K', 'P', 'T', '0', '1'};

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64s(std::string& out, const std::vector<double>& v) {
  size_t off = out.size();
  out.resize(off + v.size() * sizeof(double));
  std::memcpy(out.data() + off, v.data(), v.size() * sizeof(double));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  uint8_t u8() {
    need(1);
    return static_cast<unsigned char>(b_[pos_++]);
  }
  std::string str(size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void f64s(std::vector<double>& out) {
    need(out.size() * sizeof(double));
    std::memcpy(out.data(), b_.data() + pos_, out.size() * sizeof(double));
    pos_ += out.size() * sizeof(double);
  }
  size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(size_t n) const {
    if (pos_ + n > b_.size()) throw std::runtime_error("checkpoint: truncated data");
  }
  const std::string& b_;
  size_t pos_ = 0;
};

}  // namespace

std::string checkpoint_to_bytes(const ParamStore& store, bool with_optimizer_state) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, 1);
  auto names = store.names();
  put_u32(out, static_cast<uint32_t>(names.size()));
  for (const auto& name : names) {
    const Tensor& t = store.get(name);
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
    out.push_back(1);  // dtype f64
  }
  out.push_back(with_optimizer_state ? 1 : 0);
  if (with_optimizer_state) put_u64(out, static_cast<uint64_t>(store.step_count));
  for (const auto& name : names) put_f64s(out, store.get(name).v);
  if (with_optimizer_state) {
    for (const auto& name : names) put_f64s(out, store.slots().at(name).m.v);
    for (const auto& name : names) put_f64s(out, store.slots().at(name).s.v);
  }
  return out;
}

ParamStore checkpoint_from_bytes(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  Reader r(bytes);
  r.str(sizeof(kMagic));
  uint32_t version = r.u32();
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  uint32_t count = r.u32();
  ParamStore store;
  std::vector<std::string> names;
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u32());
    uint32_t ndim = r.u32();
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(r.u32());
    uint8_t dtype = r.u8();
    if (dtype != 1) throw std::runtime_error("checkpoint: unsupported dtype");
    store.create(name, shape);
    names.push_back(std::move(name));
  }
  bool with_opt = r.u8() != 0;
  if (with_opt) store.step_count = static_cast<int64_t>(r.u64());
  for (const auto& name : names) r.f64s(store.get(name).v);
  if (with_opt) {
    for (const auto& name : names) r.f64s(store.slots_mutable().at(name).m.v);
    for (const auto& name : names) r.f64s(store.slots_mutable().at(name).s.v);
  }
  if (r.remaining() != 0) throw std::runtime_error("checkpoint: trailing bytes");
  return store;
}

void save_checkpoint(const ParamStore& store, const std::string& path, bool with_optimizer_state) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
  std::string bytes = checkpoint_to_bytes(store, with_optimizer_state);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ParamStore load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return checkpoint_from_bytes(bytes);
}

}  // namespace pushgrasp::nn
