#include "multibin/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace multibin {

namespace {

constexpr char kMagic[4] = {'M', 'B', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
void write_doubles(std::ostream& out, const double* p, std::size_t count) {
  out.write(reinterpret_cast<const char*>(p),
            static_cast<std::streamsize>(count * sizeof(double)));
}
void read_doubles(std::istream& in, double* p, std::size_t count) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

void write_boundaries(std::ostream& out, const Discretization& d) {
  const std::vector<double> bounds = d.boundaries();
  write_u32(out, static_cast<uint32_t>(bounds.size()));
  write_doubles(out, bounds.data(), bounds.size());
}

Discretization read_boundaries(std::istream& in) {
  const uint32_t count = read_u32(in);
  std::vector<double> bounds(count);
  read_doubles(in, bounds.data(), count);
  return discretization_from_boundaries(std::move(bounds));
}

void write_layer(std::ostream& out, const DenseLayer& layer) {
  write_u32(out, static_cast<uint32_t>(layer.out_dim()));
  write_u32(out, static_cast<uint32_t>(layer.in_dim()));
  write_u32(out, layer.activation == Activation::relu ? 1u : 0u);
  write_doubles(out, layer.weights.data(), layer.weights.size());
  write_doubles(out, layer.biases.data(), layer.biases.size());
}

DenseLayer read_layer(std::istream& in) {
  DenseLayer layer;
  const uint32_t out_dim = read_u32(in);
  const uint32_t in_dim = read_u32(in);
  layer.activation = read_u32(in) == 1u ? Activation::relu : Activation::linear;
  layer.weights = Matrix(out_dim, in_dim);
  layer.biases.resize(out_dim);
  read_doubles(in, layer.weights.data(), layer.weights.size());
  read_doubles(in, layer.biases.data(), layer.biases.size());
  return layer;
}

}  // namespace

void save_checkpoint(const std::string& path, const MultiHeadNetwork& net,
                     const DiscretizationEnsemble& ensemble) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u32(out, static_cast<uint32_t>(net.mode));

  write_boundaries(out, ensemble.base);
  write_u32(out, static_cast<uint32_t>(ensemble.members.size()));
  for (const Discretization& member : ensemble.members) write_boundaries(out, member);

  write_u32(out, static_cast<uint32_t>(net.trunk.size()));
  for (const DenseLayer& layer : net.trunk) write_layer(out, layer);
  write_u32(out, static_cast<uint32_t>(net.heads.size()));
  for (const DenseLayer& head : net.heads) write_layer(out, head);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  if (read_u32(in) != kVersion)
    throw std::runtime_error("load_checkpoint: unsupported version in " + path);

  Checkpoint ckpt;
  ckpt.net.mode = static_cast<NetMode>(read_u32(in));
  ckpt.ensemble.base = read_boundaries(in);
  ckpt.ensemble.support = ckpt.ensemble.base.support;
  const uint32_t members = read_u32(in);
  for (uint32_t i = 0; i < members; ++i)
    ckpt.ensemble.members.push_back(read_boundaries(in));

  const uint32_t trunk_count = read_u32(in);
  for (uint32_t i = 0; i < trunk_count; ++i) ckpt.net.trunk.push_back(read_layer(in));
  const uint32_t head_count = read_u32(in);
  for (uint32_t i = 0; i < head_count; ++i) ckpt.net.heads.push_back(read_layer(in));
  if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
  return ckpt;
}

}  // namespace multibin
