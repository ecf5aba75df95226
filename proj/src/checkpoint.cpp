// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace patchdelta {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'P', 'D', 'N', 'C', 'K', 'P', 'T', '\0'};

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_doubles(double* dst, std::size_t n) {
    if (n > (bytes_.size() - pos_) / sizeof(double)) data_error("checkpoint: truncated tensor data");
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) data_error("checkpoint: truncated file");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void put_tensor(std::string& out, const std::string& name, const Matrix& m) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put<std::uint64_t>(out, m.rows());
  put<std::uint64_t>(out, m.cols());
  out.append(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(double));
}

}  // namespace

nlohmann::ordered_json config_to_json(const ModelConfig& c) {
  return {{"variant", std::string(variant_name(c.variant))},
          {"window", c.window},
          {"patch", c.patch},
          {"features", c.features},
          {"d_model", c.d_model},
          {"d_ff", c.d_ff},
          {"seed", c.seed}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.window = j.at("window").get<std::size_t>();
    c.patch = j.at("patch").get<std::size_t>();
    c.features = j.at("features").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    data_error(std::string("checkpoint: malformed model config: ") + e.what());
  }
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::size_t count = 0;
  ckpt.params.for_each([&](const std::string&, const Matrix&) { ++count; });
  if (ckpt.norm) count += 2;

  nlohmann::ordered_json header;
  header["format"] = "patchdelta-checkpoint";
  header["model"] = config_to_json(ckpt.config);
  header["tensors"] = count;
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, header_text.size());
  out += header_text;
  ckpt.params.for_each([&](const std::string& name, const Matrix& m) { put_tensor(out, name, m); });
  if (ckpt.norm) {
    put_tensor(out, "norm.mean", Matrix::row_vector(ckpt.norm->mean));
    put_tensor(out, "norm.std", Matrix::row_vector(ckpt.norm->stddev));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) data_error("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) data_error("checkpoint: unsupported format version " + std::to_string(version));
  const auto header_len = r.get<std::uint64_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.get_string(header_len));
  } catch (const nlohmann::json::exception& e) {
    data_error(std::string("checkpoint: malformed header: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.config = config_from_json(header.at("model"));
  try {
    ckpt.config.validate();
  } catch (const Error& e) {
    data_error(std::string("checkpoint: ") + e.what());
  }
  ckpt.params = allocate_params(ckpt.config);
  const auto count = header.at("tensors").get<std::size_t>();

  std::size_t seen = 0;
  auto read_tensor = [&](const std::string& expected, Matrix& m) {
    const std::string name = r.get_string(r.get<std::uint32_t>());
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (name != expected) data_error("checkpoint: expected tensor '" + expected + "', found '" + name + "'");
    if (rows != m.rows() || cols != m.cols())
      data_error("checkpoint: tensor '" + name + "' has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                 ", expected " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    r.get_doubles(m.data(), m.size());
    ++seen;
  };
  ckpt.params.for_each([&](const std::string& name, Matrix& m) { read_tensor(name, m); });
  if (count == seen + 2) {
    Matrix mean(1, ckpt.config.features), stddev(1, ckpt.config.features);
    read_tensor("norm.mean", mean);
    read_tensor("norm.std", stddev);
    ckpt.norm = NormStats{{mean.data(), mean.data() + mean.size()}, {stddev.data(), stddev.data() + stddev.size()}};
  }
  if (seen != count || !r.done()) data_error("checkpoint: tensor count mismatch or trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) io_error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) io_error("write failure on '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream s;
  s << in.rdbuf();
  return deserialize_checkpoint(s.str());
}

}  // namespace patchdelta
