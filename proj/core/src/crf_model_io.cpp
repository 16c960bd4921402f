#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "crowdlab/crf.hpp"
#include "crowdlab/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; add byte swapping for this platform");

namespace crowdlab {
namespace {

constexpr char kMagic[8] = {'C', 'R', 'W', 'L', 'C', 'R', 'F', '1'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  T value;
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw Error("truncated model file: " + path);
  return value;
}

std::string get_string(std::istream& is, const std::string& path) {
  const auto len = get<std::uint32_t>(is, path);
  if (len > (1u << 26)) throw Error("implausible string length in model file: " + path);
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw Error("truncated model file: " + path);
  return s;
}

}  // namespace

void save_model(const CrfModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kFormatVersion);

  put<std::uint8_t>(os, model.config.cost_sensitive ? 1 : 0);
  put<std::uint8_t>(os, model.config.transitions ? 1 : 0);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(model.config.window));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(model.config.affix_len));
  put<double>(os, model.config.l2);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(model.config.max_epochs));
  put<double>(os, model.config.grad_tolerance);

  put<std::uint32_t>(os, static_cast<std::uint32_t>(model.labels.size()));
  for (const auto& name : model.labels.names()) put_string(os, name);

  const auto keys = model.features.keys();
  put<std::uint64_t>(os, static_cast<std::uint64_t>(keys.size()));
  for (const auto& key : keys) put_string(os, key);

  put<std::uint64_t>(os, static_cast<std::uint64_t>(model.weights.size()));
  for (double w : model.weights) put<double>(os, w);

  os.flush();
  if (!os) throw Error("write failed: " + path);
}

CrfModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open model file: " + path);

  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("not a model file: " + path);
  const auto version = get<std::uint32_t>(is, path);
  if (version != kFormatVersion)
    throw Error("unsupported model format version " + std::to_string(version) + ": " + path);

  CrfConfig config;
  config.cost_sensitive = get<std::uint8_t>(is, path) != 0;
  config.transitions = get<std::uint8_t>(is, path) != 0;
  config.window = static_cast<int>(get<std::uint32_t>(is, path));
  config.affix_len = static_cast<int>(get<std::uint32_t>(is, path));
  config.l2 = get<double>(is, path);
  config.max_epochs = static_cast<int>(get<std::uint32_t>(is, path));
  config.grad_tolerance = get<double>(is, path);

  const auto num_labels = get<std::uint32_t>(is, path);
  LabelSet labels;
  for (std::uint32_t i = 0; i < num_labels; ++i) labels.intern(get_string(is, path));
  if (labels.size() != static_cast<int>(num_labels))
    throw Error("duplicate label names in model file: " + path);

  const auto num_keys = get<std::uint64_t>(is, path);
  std::vector<std::string> keys;
  keys.reserve(num_keys);
  for (std::uint64_t i = 0; i < num_keys; ++i) keys.push_back(get_string(is, path));

  auto model = CrfModel::make(std::move(labels), FeatureMap::from_keys(keys), config);
  const auto num_weights = get<std::uint64_t>(is, path);
  if (num_weights != model.num_weights())
    throw Error("weight count does not match feature map in model file: " + path);
  for (std::uint64_t i = 0; i < num_weights; ++i) model.weights[i] = get<double>(is, path);

  char extra;
  if (is.read(&extra, 1)) throw Error("trailing bytes in model file: " + path);
  return model;
}

}  // namespace crowdlab
