#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cuneinet/errors.hpp"
#include "cuneinet/network.hpp"

namespace cuneinet {
namespace {

constexpr char kMagic[8] = {'C', 'U', 'N', 'E', 'I', 'C', 'K', 'P'};

template <typename U>
void put(std::vector<std::uint8_t>& out, U v) {
  std::uint8_t b[sizeof(U)];
  std::memcpy(b, &v, sizeof(U));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(b[i], b[sizeof(U) - 1 - i]);
  out.insert(out.end(), b, b + sizeof(U));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    std::uint8_t b[sizeof(U)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big)
      for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(b[i], b[sizeof(U) - 1 - i]);
    pos_ += sizeof(U);
    U v;
    std::memcpy(&v, b, sizeof(U));
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data()) + pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ParseError("truncated checkpoint", bytes_.size());
  }
  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put<std::uint32_t>(out, kCheckpointVersion);

  std::string cfg;
  for (const auto& [k, v] : ckpt.config.to_key_values()) cfg += k + "=" + v + "\n";
  put_string(out, cfg);

  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.class_names.size()));
  for (const auto& c : ckpt.class_names) put_string(out, c);

  const auto& tensors = ckpt.params.tensors();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& p : tensors) {
    put_string(out, p.name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t d : p.tensor.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float v : p.tensor.values()) put<float>(out, v);
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(8);
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw ParseError("not a checkpoint file", 0);
  for (int i = 0; i < 8; ++i) r.get<std::uint8_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 8);

  Checkpoint ckpt;
  const std::size_t cfg_at = r.pos();
  std::istringstream cfg(r.get_string());
  for (std::string line; std::getline(cfg, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || !ckpt.config.set(line.substr(0, eq), line.substr(eq + 1)))
      throw ParseError("bad checkpoint config line '" + line + "'", cfg_at);
  }
  ckpt.config.validate();

  const auto n_names = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_names; ++i) ckpt.class_names.push_back(r.get_string());
  if (!ckpt.class_names.empty() && ckpt.class_names.size() != ckpt.config.n_classes)
    throw ParseError("class name count does not match n_classes", r.pos());

  const auto layout = parameter_layout(ckpt.config);
  const auto n_params = r.get<std::uint32_t>();
  if (n_params != layout.size())
    throw ParseError("checkpoint holds " + std::to_string(n_params) + " tensors, config needs " +
                         std::to_string(layout.size()),
                     r.pos());
  ParameterSet<float> set;
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::size_t at = r.pos();
    const std::string name = r.get_string();
    Shape shape(r.get<std::uint32_t>());
    for (auto& d : shape) d = r.get<std::uint32_t>();
    if (name != layout[i].first || shape != layout[i].second)
      throw ParseError("parameter '" + name + "' " + shape_string(shape) + " does not match '" +
                           layout[i].first + "' " + shape_string(layout[i].second),
                       at);
    std::vector<float> v(shape_numel(shape));
    for (float& x : v) x = r.get<float>();
    set.push_back({name, Tensor<float>(shape, std::move(v), true)});
  }
  if (!r.at_end()) throw ParseError("trailing bytes after checkpoint payload", r.pos());
  ckpt.params = ModelParams<float>(std::move(set));
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace cuneinet
