#include "multibin/synthdata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "multibin/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset and checkpoint formats assume a little-endian host");

namespace multibin {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Pattern geometry in [-1, 1]^2 coordinates. The capsule is even in x, so
// mirroring the image horizontally is the same as negating the angle; the
// off-center dot keeps the pattern free of rotational self-similarity.
constexpr double kBarLoY = -0.50;
constexpr double kBarHiY = 0.28;
constexpr double kBarRadius = 0.14;
constexpr double kDotY = 0.56;
constexpr double kDotRadius = 0.16;

double coverage(double signed_dist, double aa_width) {
  const double v = 0.5 - signed_dist / aa_width;
  return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

double pattern_value(double u, double v, double aa_width) {
  // capsule: distance to the segment x=0, y in [kBarLoY, kBarHiY]
  const double cy = v < kBarLoY ? kBarLoY : (v > kBarHiY ? kBarHiY : v);
  const double bar_d = std::sqrt(u * u + (v - cy) * (v - cy)) - kBarRadius;
  const double dot_d = std::sqrt(u * u + (v - kDotY) * (v - kDotY)) - kDotRadius;
  return std::max(coverage(bar_d, aa_width), coverage(dot_d, aa_width));
}

// stream ids for counter-based seeding
constexpr uint64_t kTrainStream = 0;
constexpr uint64_t kTestStream = 1;

}  // namespace

std::vector<double> render_rotated_pattern(std::size_t size, double angle_deg,
                                           double shift_x, double shift_y,
                                           double scale) {
  std::vector<double> img(size * size);
  const double theta = angle_deg * kPi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double px = 2.0 / static_cast<double>(size);
  const double aa = 1.5 * px / scale;  // ~1.5 pixels of edge falloff

  for (std::size_t row = 0; row < size; ++row) {
    const double y = 1.0 - (static_cast<double>(row) + 0.5) * px;
    for (std::size_t col = 0; col < size; ++col) {
      const double x = (static_cast<double>(col) + 0.5) * px - 1.0;
      // rotate the sample point back into pattern space
      const double xs = (x - shift_x) / scale;
      const double ys = (y - shift_y) / scale;
      const double u = c * xs + s * ys;
      const double v = -s * xs + c * ys;
      img[row * size + col] = pattern_value(u, v, aa);
    }
  }
  return img;
}

namespace {

std::vector<Sample> generate_rotated_split(const RotatedPatternTask& task,
                                           uint64_t stream, std::size_t count) {
  std::vector<Sample> out(count);
  const uint64_t split_seed = derive_seed(task.seed, stream);
  const uint64_t span = static_cast<uint64_t>(task.angle_hi - task.angle_lo) + 1;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(split_seed, i));
    const int angle = task.angle_lo + static_cast<int>(rng.next_below(span));
    const double shift_x = rng.next_range(-0.12, 0.12);
    const double shift_y = rng.next_range(-0.12, 0.12);
    const double scale = rng.next_range(0.85, 1.15);
    out[i].features = render_rotated_pattern(task.image_size, angle, shift_x, shift_y, scale);
    // per-pixel sensor noise, clamped back into [0, 1]
    for (double& px : out[i].features)
      px = std::clamp(px + 0.05 * rng.next_normal(), 0.0, 1.0);
    out[i].target = static_cast<double>(angle);
  }
  return out;
}

std::vector<Sample> generate_scalar_split(const ScalarTask& task, uint64_t stream,
                                          std::size_t count) {
  std::vector<Sample> out(count);
  const uint64_t split_seed = derive_seed(task.seed, stream);
  const Interval support = task.support();
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(split_seed, i));
    const double x = rng.next_range(-1.0, 1.0);
    double y = scalar_fn(task.fn, x);
    if (task.noise_sd > 0.0) y += task.noise_sd * rng.next_normal();
    y = std::clamp(y, support.lo, support.hi);
    out[i].features = {x};
    out[i].target = y;
  }
  return out;
}

}  // namespace

Dataset generate_rotated(const RotatedPatternTask& task) {
  if (task.image_size < 8)
    throw std::invalid_argument("generate_rotated: image_size must be >= 8");
  if (task.angle_hi < task.angle_lo)
    throw std::invalid_argument("generate_rotated: empty angle range");
  Dataset data;
  data.train = generate_rotated_split(task, kTrainStream, task.n_train);
  data.test = generate_rotated_split(task, kTestStream, task.n_test);
  return data;
}

Dataset generate_scalar(const ScalarTask& task) {
  Dataset data;
  data.train = generate_scalar_split(task, kTrainStream, task.n_train);
  data.test = generate_scalar_split(task, kTestStream, task.n_test);
  return data;
}

double scalar_fn(ScalarFn fn, double x) {
  switch (fn) {
    case ScalarFn::sine:
      return std::sin(kPi * x);
    case ScalarFn::cubic:
      return x * x * x;
    case ScalarFn::tanh_ramp:
      return std::tanh(3.0 * x);
  }
  throw std::invalid_argument("scalar_fn: unknown function id");
}

ScalarFn scalar_fn_from_name(const std::string& name) {
  if (name == "sine") return ScalarFn::sine;
  if (name == "cubic") return ScalarFn::cubic;
  if (name == "tanh") return ScalarFn::tanh_ramp;
  throw std::invalid_argument("unknown scalar function '" + name + "' (sine|cubic|tanh)");
}

namespace {

constexpr char kDatasetMagic[4] = {'M', 'B', 'D', 'S'};
constexpr uint32_t kDatasetVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_doubles(std::ostream& out, const double* p, std::size_t count) {
  out.write(reinterpret_cast<const char*>(p),
            static_cast<std::streamsize>(count * sizeof(double)));
}
uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
void read_doubles(std::istream& in, double* p, std::size_t count) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

void write_split(std::ostream& out, const std::vector<Sample>& split) {
  for (const Sample& s : split) {
    write_doubles(out, s.features.data(), s.features.size());
    write_doubles(out, &s.target, 1);
  }
}

void read_split(std::istream& in, std::vector<Sample>& split, std::size_t count,
                std::size_t dim) {
  split.resize(count);
  for (Sample& s : split) {
    s.features.resize(dim);
    read_doubles(in, s.features.data(), dim);
    read_doubles(in, &s.target, 1);
  }
}

}  // namespace

void dump_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dump_dataset: cannot open " + path);
  const std::size_t dim = data.train.empty()
                              ? (data.test.empty() ? 0 : data.test[0].features.size())
                              : data.train[0].features.size();
  out.write(kDatasetMagic, 4);
  write_u32(out, kDatasetVersion);
  write_u64(out, data.train.size());
  write_u64(out, data.test.size());
  write_u64(out, dim);
  write_split(out, data.train);
  write_split(out, data.test);
  if (!out) throw std::runtime_error("dump_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kDatasetMagic, 4) != 0)
    throw std::runtime_error("load_dataset: bad magic in " + path);
  const uint32_t version = read_u32(in);
  if (version != kDatasetVersion)
    throw std::runtime_error("load_dataset: unsupported version in " + path);
  const uint64_t n_train = read_u64(in);
  const uint64_t n_test = read_u64(in);
  const uint64_t dim = read_u64(in);
  Dataset data;
  read_split(in, data.train, n_train, dim);
  read_split(in, data.test, n_test, dim);
  if (!in) throw std::runtime_error("load_dataset: truncated file " + path);
  return data;
}

}  // namespace multibin
