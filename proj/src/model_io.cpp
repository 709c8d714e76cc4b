#include "miprune/model_io.hpp"

#include "miprune/io_util.hpp"

namespace miprune {

namespace {
constexpr std::array<char, 4> kMagic = {'M', 'I', 'P', 'R'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxDim = 1u << 24;  // sanity bound against corrupt headers
}  // namespace

void save_model(const Networkf& net, const std::filesystem::path& path) {
  net.validate();
  auto os = open_output(path);
  write_magic(os, kMagic);
  write_u32(os, kVersion);
  write_u32(os, static_cast<uint32_t>(net.depth()));
  write_u32(os, static_cast<uint32_t>(net.input_dim));
  for (const auto& layer : net.layers) {
    write_u32(os, static_cast<uint32_t>(layer.out_dim()));
    write_u8(os, static_cast<uint8_t>(layer.activation));
    write_bytes(os, layer.weights.data(), sizeof(float) * layer.weights.size());
    write_bytes(os, layer.bias.data(), sizeof(float) * layer.bias.size());
  }
  if (!os) throw FormatError("failed writing model to " + path.string());
}

Networkf load_model(const std::filesystem::path& path) {
  auto is = open_input(path);
  const std::string what = "model " + path.string();
  expect_magic(is, kMagic, what);
  const uint32_t version = read_u32(is, what + " version");
  if (version != kVersion) {
    throw FormatError("unsupported model version " + std::to_string(version) + " in " +
                      path.string());
  }
  const uint32_t depth = read_u32(is, what + " layer count");
  const uint32_t input_dim = read_u32(is, what + " input dim");
  if (depth < 1 || input_dim < 1 || depth > kMaxDim || input_dim > kMaxDim) {
    throw FormatError("inconsistent dimensions in " + path.string());
  }
  Networkf net;
  net.input_dim = static_cast<Index>(input_dim);
  Index in_dim = net.input_dim;
  for (uint32_t l = 0; l < depth; ++l) {
    const uint32_t out_dim = read_u32(is, what + " layer dim");
    if (out_dim < 1 || out_dim > kMaxDim) {
      throw FormatError("inconsistent dimensions in " + path.string());
    }
    const uint8_t act = read_u8(is, what + " activation");
    if (act > 1) {
      throw FormatError("unknown activation code " + std::to_string(act) + " in " +
                        path.string());
    }
    LinearLayer<float> layer;
    layer.activation = static_cast<Activation>(act);
    layer.weights.resize(out_dim, in_dim);
    read_bytes(is, layer.weights.data(), sizeof(float) * layer.weights.size(),
               what + " weights");
    layer.bias.resize(out_dim);
    read_bytes(is, layer.bias.data(), sizeof(float) * layer.bias.size(), what + " bias");
    net.layers.push_back(std::move(layer));
    in_dim = static_cast<Index>(out_dim);
  }
  net.validate();
  return net;
}

}  // namespace miprune
