#include "rasc/container.hpp"

#include <cstring>

#include "rasc/bytes.hpp"
#include "rasc/error.hpp"

namespace rasc {

std::size_t Container::payload_bytes() const {
  std::size_t n = z_stream.size();
  for (const auto& s : slice_streams) n += s.size();
  return n;
}

std::size_t header_bytes(const Container& c) {
  return 8 + 8 + 4 + 8 + 4 + 1 + 4 + 1 + 4 * c.slice_streams.size();
}

std::vector<std::uint8_t> serialize_container(const Container& c) {
  require(c.slice_streams.size() <= 255, ErrorKind::kInvalidArgument, "too many slice streams");
  ByteWriter w;
  w.text(std::string(kContainerMagic, 8));
  w.bytes(c.model_hash);
  w.u32(c.sample_rate);
  w.u64(c.samples);
  w.u32(c.frames);
  w.u8(c.lambda_index);
  w.u32(static_cast<std::uint32_t>(c.z_stream.size()));
  w.bytes(c.z_stream);
  w.u8(static_cast<std::uint8_t>(c.slice_streams.size()));
  for (const auto& s : c.slice_streams) {
    w.u32(static_cast<std::uint32_t>(s.size()));
    w.bytes(s);
  }
  return w.take();
}

Container parse_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorKind::kBitstream);
  require(bytes.size() >= 8 && r.text(8) == std::string(kContainerMagic, 8),
          ErrorKind::kBitstream, "not a .rasc container (bad magic)");
  Container c;
  auto hash = r.bytes(8);
  std::memcpy(c.model_hash.data(), hash.data(), 8);
  c.sample_rate = r.u32();
  c.samples = r.u64();
  c.frames = r.u32();
  c.lambda_index = r.u8();
  auto z = r.bytes(r.u32());
  c.z_stream.assign(z.begin(), z.end());
  const std::uint8_t slices = r.u8();
  for (std::uint8_t i = 0; i < slices; ++i) {
    auto s = r.bytes(r.u32());
    c.slice_streams.emplace_back(s.begin(), s.end());
  }
  require(r.done(), ErrorKind::kBitstream,
          "container has " + std::to_string(r.remaining()) + " trailing bytes");
  return c;
}

void save_container(const std::string& path, const Container& c) {
  write_file(path, serialize_container(c));
}

Container load_container(const std::string& path) { return parse_container(read_file(path)); }

}  // namespace rasc
