// core/include/tsadapt/common.h

// Copyright 2026  The tsadapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef TSADAPT_COMMON_H_
#define TSADAPT_COMMON_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace tsadapt {

/// Dense row-major matrix of doubles; every numeric kernel in the library
/// works on this type.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// All library failures are reported by throwing Error (or a subclass).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/// Stream-style message builder:  throw Error(Msg() << "bad dim " << d);
class Msg {
 public:
  template <typename T>
  Msg &operator<<(const T &value) {
    stream_ << value;
    return *this;
  }
  operator std::string() const { return stream_.str(); }

 private:
  std::ostringstream stream_;
};

#define TSADAPT_CHECK(cond, message)                               \
  do {                                                             \
    if (!(cond)) throw ::tsadapt::Error(::tsadapt::Msg() << message); \
  } while (0)

/// splitmix64 finalizer; used to derive independent per-task seeds.
inline uint64_t MixSeed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t DeriveSeed(uint64_t base, uint64_t stream) {
  return MixSeed(MixSeed(base) ^ MixSeed(stream + 0x632be59bd9b4e019ULL));
}

inline uint64_t DeriveSeed(uint64_t base, uint64_t a, uint64_t b) {
  return DeriveSeed(DeriveSeed(base, a), b);
}

/// Seeded random source.  The distribution helpers are written out by hand
/// so that draws are identical across standard-library implementations
/// (std::uniform_real_distribution and friends are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  /// Uniform integer in [0, n).
  uint64_t UniformInt(uint64_t n) {
    if (n <= 1) return 0;
    // Rejection sampling removes modulo bias.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  double Gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = Uniform();
    } while (u1 <= 0.0);
    const double u2 = Uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  uint64_t Next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fisher-Yates shuffle driven by Rng.
template <typename Container>
void Shuffle(Container *items, Rng *rng) {
  for (size_t i = items->size(); i > 1; --i) {
    const size_t j = rng->UniformInt(i);
    std::swap((*items)[i - 1], (*items)[j]);
  }
}

}  // namespace tsadapt

#endif  // TSADAPT_COMMON_H_
