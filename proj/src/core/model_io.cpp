#include "core/model_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace photoscore {

namespace {

constexpr char kMagic[4] = {'R', 'S', 'R', 'L'};
constexpr uint16_t kFormatVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

uint16_t get_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

double get_f64(const unsigned char* p) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

struct ManifestBlock {
  std::string name;
  size_t count = 0;
};

// The zerocenter mean travels as the first block so that every float in the
// file round-trips through raw bytes, never through text.
std::vector<std::pair<std::string, std::vector<double>*>> block_list(
    TypeCNetwork& net) {
  std::vector<std::pair<std::string, std::vector<double>*>> blocks;
  for (auto& g : net.state_params()) blocks.emplace_back(g.name, g.value);
  return blocks;
}

}  // namespace

void save_model(const TypeCNetwork& net, const std::filesystem::path& path) {
  auto& mutable_net = const_cast<TypeCNetwork&>(net);
  auto blocks = block_list(mutable_net);

  std::ostringstream manifest;
  manifest << "arch type-c\n";
  manifest << "seed " << net.seed << "\n";
  manifest << "tensor zerocenter 3\n";
  for (const auto& [name, values] : blocks)
    manifest << "tensor " << name << " " << values->size() << "\n";
  const std::string mtext = manifest.str();

  std::string payload;
  payload.append(kMagic, 4);
  put_u16(payload, kFormatVersion);
  put_u32(payload, static_cast<uint32_t>(mtext.size()));
  payload += mtext;
  for (double z : net.zerocenter) put_f64(payload, z);
  for (const auto& [name, values] : blocks)
    for (double v : *values) put_f64(payload, v);

  const uint32_t crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()),
            static_cast<uInt>(payload.size())));
  put_u32(payload, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open " + path.string());
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.flush();
  if (!out) fail(Errc::io_error, "short write to " + path.string());
}

TypeCNetwork load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  std::string raw((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());

  if (raw.size() < 10) fail(Errc::corrupt_file, "model header incomplete");
  if (std::memcmp(raw.data(), kMagic, 4) != 0)
    fail(Errc::format_version_mismatch, "not a model file (bad magic)");
  const uint16_t version = get_u16(bytes + 4);
  if (version != kFormatVersion)
    fail(Errc::format_version_mismatch,
         "unsupported format version " + std::to_string(version));
  const uint32_t mlen = get_u32(bytes + 6);
  if (raw.size() < 10 + static_cast<size_t>(mlen) + 4)
    fail(Errc::corrupt_file, "model manifest incomplete");

  const std::string mtext = raw.substr(10, mlen);
  std::istringstream manifest(mtext);
  std::string line;
  uint64_t seed = 0;
  bool arch_ok = false;
  std::vector<ManifestBlock> declared;
  while (std::getline(manifest, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "arch") {
      std::string arch;
      ls >> arch;
      if (arch != "type-c")
        fail(Errc::format_version_mismatch, "unknown architecture " + arch);
      arch_ok = true;
    } else if (key == "seed") {
      if (!(ls >> seed)) fail(Errc::corrupt_file, "unreadable seed");
    } else if (key == "tensor") {
      ManifestBlock b;
      if (!(ls >> b.name >> b.count))
        fail(Errc::corrupt_file, "unreadable tensor line: " + line);
      declared.push_back(std::move(b));
    } else if (!key.empty()) {
      fail(Errc::corrupt_file, "unknown manifest entry: " + key);
    }
  }
  if (!arch_ok) fail(Errc::corrupt_file, "manifest missing architecture");

  size_t total = 0;
  for (const auto& b : declared) total += b.count;
  const size_t body = 10 + static_cast<size_t>(mlen) + total * 8;
  if (raw.size() < body + 4)
    fail(Errc::corrupt_file, "model parameter data incomplete");
  if (raw.size() > body + 4)
    fail(Errc::corrupt_file, "trailing bytes after checksum");

  const uint32_t stored = get_u32(bytes + body);
  const uint32_t actual = static_cast<uint32_t>(
      crc32(0L, bytes, static_cast<uInt>(body)));
  if (stored != actual) fail(Errc::corrupt_file, "checksum mismatch");

  TypeCNetwork net;
  net.configure_layers();
  net.seed = seed;

  std::vector<std::pair<std::string, std::vector<double>*>> expected;
  expected.emplace_back("zerocenter", nullptr);
  for (auto& [name, values] : block_list(net))
    expected.emplace_back(name, values);
  if (declared.size() != expected.size())
    fail(Errc::corrupt_file, "manifest block count mismatch");

  size_t cursor = 10 + static_cast<size_t>(mlen);
  for (size_t i = 0; i < declared.size(); ++i) {
    const auto& b = declared[i];
    if (b.name != expected[i].first)
      fail(Errc::corrupt_file, "unexpected tensor " + b.name);
    if (expected[i].second == nullptr) {
      if (b.count != 3) fail(Errc::corrupt_file, "zerocenter size mismatch");
      for (int c = 0; c < 3; ++c)
        net.zerocenter[c] = get_f64(bytes + cursor + 8 * c);
    } else {
      if (b.count != expected[i].second->size())
        fail(Errc::corrupt_file, "tensor " + b.name + " size mismatch");
      for (size_t k = 0; k < b.count; ++k)
        (*expected[i].second)[k] = get_f64(bytes + cursor + 8 * k);
    }
    cursor += b.count * 8;
  }
  return net;
}

bool models_equal(const TypeCNetwork& a, const TypeCNetwork& b) {
  if (a.seed != b.seed) return false;
  if (std::memcmp(a.zerocenter.data(), b.zerocenter.data(),
                  sizeof(double) * 3) != 0)
    return false;
  auto ga = block_list(const_cast<TypeCNetwork&>(a));
  auto gb = block_list(const_cast<TypeCNetwork&>(b));
  if (ga.size() != gb.size()) return false;
  for (size_t i = 0; i < ga.size(); ++i) {
    const auto& va = *ga[i].second;
    const auto& vb = *gb[i].second;
    if (ga[i].first != gb[i].first || va.size() != vb.size()) return false;
    if (!va.empty() &&
        std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

}  // namespace photoscore
