#include "rasc/checkpoint.hpp"

#include <cstring>
#include <unordered_set>

#include "rasc/bytes.hpp"

namespace rasc {

const CheckpointRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint) {
  ByteWriter w;
  w.text(std::string(kCheckpointMagic, 8));
  w.bytes(checkpoint.config_hash);
  for (const auto& rec : checkpoint.records) {
    w.u32(static_cast<std::uint32_t>(rec.name.size()));
    w.text(rec.name);
    const Precision p = rec.value.precision();
    w.u8(static_cast<std::uint8_t>(p));
    w.u32(static_cast<std::uint32_t>(rec.value.rank()));
    for (auto d : rec.value.shape()) w.u64(static_cast<std::uint64_t>(d));
    for (double v : rec.value.values()) {
      if (p == Precision::kF32) {
        w.f32(static_cast<float>(v));
      } else {
        w.f64(v);
      }
    }
  }
  return w.take();
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorKind::kModelLoad);
  if (r.text(8) != std::string(kCheckpointMagic, 8)) {
    fail(ErrorKind::kModelLoad, "not a checkpoint (bad magic)");
  }
  Checkpoint ckpt;
  auto hash = r.bytes(8);
  std::memcpy(ckpt.config_hash.data(), hash.data(), 8);
  std::unordered_set<std::string> seen;
  while (!r.done()) {
    const auto name_len = r.u32();
    require(name_len > 0 && name_len <= 4096, ErrorKind::kModelLoad, "bad record name length");
    std::string name = r.text(name_len);
    require(seen.insert(name).second, ErrorKind::kModelLoad, "duplicate record " + name);
    const auto tag = r.u8();
    require(tag <= 1, ErrorKind::kModelLoad, "bad precision tag in " + name);
    const auto precision = static_cast<Precision>(tag);
    const auto rank = r.u32();
    require(rank <= 8, ErrorKind::kModelLoad, "bad rank in " + name);
    Shape shape;
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto d = r.u64();
      require(d > 0 && d < (1ull << 32), ErrorKind::kModelLoad, "bad dim in " + name);
      shape.push_back(static_cast<std::int64_t>(d));
      count *= d;
    }
    const std::size_t width = precision == Precision::kF32 ? 4 : 8;
    require(count <= r.remaining() / width, ErrorKind::kModelLoad, "truncated record " + name);
    std::vector<double> values(count);
    for (auto& v : values) v = precision == Precision::kF32 ? r.f32() : r.f64();
    ckpt.records.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values), precision)});
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const Error& e) {
    fail(ErrorKind::kModelLoad, e.what());
  }
  return parse_checkpoint(bytes);
}

}  // namespace rasc
