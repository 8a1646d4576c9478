#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multibin/binning.hpp"
#include "multibin/encoding.hpp"

namespace multibin {

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// Angle-from-pixels task: a fixed bar-plus-dot pattern, rendered with an
// anti-aliased analytic formula and rotated by an integer angle drawn
// uniformly from [angle_lo, angle_hi]. Per-sample jitter (sub-pixel shift and
// scale) plays the role the varying digits play in a real image dataset.
struct RotatedPatternTask {
  std::size_t image_size = 16;  // pixels per side, >= 8
  int angle_lo = -45;           // degrees, inclusive
  int angle_hi = 45;
  std::size_t n_train = 5000;
  std::size_t n_test = 5000;
  uint64_t seed = 1;

  // Covers every integer angle with a unit-width bin; the right edge sits one
  // degree past angle_hi so angle_hi itself stays interior.
  Interval support() const {
    return {static_cast<double>(angle_lo), static_cast<double>(angle_hi) + 1.0};
  }
};

enum class ScalarFn { sine, cubic, tanh_ramp };

// 1-D regression task: x uniform in [-1, 1], y = f(x) + Gaussian noise,
// clamped to the declared support [-1, 1].
struct ScalarTask {
  ScalarFn fn = ScalarFn::sine;
  double noise_sd = 0.05;
  std::size_t n_train = 2000;
  std::size_t n_test = 2000;
  uint64_t seed = 1;

  Interval support() const { return {-1.0, 1.0}; }
};

// Renders the pattern at the given angle into a size x size image, values in
// [0, 1]. shift_x/shift_y/scale are the per-sample nuisance parameters; with
// all three at their defaults, angles t and -t render as exact mirror images
// across the vertical axis.
std::vector<double> render_rotated_pattern(std::size_t size, double angle_deg,
                                           double shift_x = 0.0, double shift_y = 0.0,
                                           double scale = 1.0);

// Both generators are pure in their task struct. Train and test come from
// independent seeded streams, and each sample is seeded by its own counter,
// so parallel and serial generation agree bitwise.
Dataset generate_rotated(const RotatedPatternTask& task);
Dataset generate_scalar(const ScalarTask& task);

double scalar_fn(ScalarFn fn, double x);
ScalarFn scalar_fn_from_name(const std::string& name);

// Flat binary dataset dump (see README for the exact layout): magic "MBDS",
// version, counts, feature dim, then little-endian 64-bit floats. Round-trips
// bit-exactly.
void dump_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

}  // namespace multibin
