#include "nexus/random.hpp"

#include <array>
#include <cmath>

namespace nexus {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t public_hash(std::span<const std::uint64_t> words) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint64_t w : words) {
    for (int shift = 56; shift >= 0; shift -= 8) {
      h ^= (w >> shift) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::uint64_t label_hash(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed, std::string_view purpose, std::uint64_t a,
         std::uint64_t b)
    : engine_(mix64(mix64(mix64(mix64(seed) ^ label_hash(purpose)) ^ a) ^ b)) {}

Rng Rng::derive(std::string_view purpose, std::uint64_t a, std::uint64_t b) {
  return Rng(next_u64(), purpose, a, b);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::index(std::size_t n) {
  if (n <= 1) return 0;
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = engine_();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

double Rng::normal(double mean, double stddev) {
  // Marsaglia polar method; no cached second variate, so every call consumes
  // a self-contained amount of the stream.
  for (;;) {
    double u = 2.0 * uniform() - 1.0;
    double v = 2.0 * uniform() - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return mean + stddev * u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

double Rng::gamma(double shape) {
  // Marsaglia-Tsang, with the standard boost for shape < 1.
  if (shape < 1.0) {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

namespace {

// Ziggurat tables, 128 layers (Marsaglia-Tsang constants, Doornik's layout).
struct Ziggurat {
  static constexpr double kR = 3.442619855899;
  static constexpr double kV = 9.91256303526217e-3;
  std::array<double, 129> x{};
  std::array<double, 128> ratio{};

  Ziggurat() {
    double f = std::exp(-0.5 * kR * kR);
    x[0] = kV / f;
    x[1] = kR;
    x[128] = 0.0;
    for (int i = 2; i < 128; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < 128; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const Ziggurat& ziggurat() {
  static const Ziggurat z;
  return z;
}

}  // namespace

void Rng::fill_normal(std::span<double> out, double stddev) {
  const Ziggurat& z = ziggurat();
  // Uniform in (0,1), never 0, for the logarithms in the tail.
  auto open01 = [this] { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; };
  for (double& dst : out) {
    for (;;) {
      const std::uint64_t bits = next_u64();
      const int layer = static_cast<int>(bits & 0x7F);
      const double u = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
      if (std::fabs(u) < z.ratio[layer]) {
        dst = stddev * u * z.x[layer];
        break;
      }
      if (layer == 0) {
        double a, b;
        do {
          a = std::log(open01()) / Ziggurat::kR;
          b = std::log(open01());
        } while (-2.0 * b < a * a);
        dst = stddev * (u < 0.0 ? a - Ziggurat::kR : Ziggurat::kR - a);
        break;
      }
      const double v = u * z.x[layer];
      const double f0 = std::exp(-0.5 * (z.x[layer] * z.x[layer] - v * v));
      const double f1 = std::exp(-0.5 * (z.x[layer + 1] * z.x[layer + 1] - v * v));
      if (f1 + uniform() * (f0 - f1) < 1.0) {
        dst = stddev * v;
        break;
      }
    }
  }
}

std::uint64_t Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(engine_);
}

}  // namespace nexus
