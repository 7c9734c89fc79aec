#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace dime {

// Stateless 64-bit mixers used to derive independent child seeds from a
// master seed plus a tag path (method name, trial index, path index, ...).
// Every random stream in an experiment is addressable this way, which is
// what makes single paths replayable.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t seed_combine(uint64_t seed, uint64_t value) {
  return splitmix64(seed ^ (0x9e3779b97f4a7c15ull + value + (seed << 6) + (seed >> 2)));
}

inline uint64_t tag_hash(std::string_view tag) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t derive_seed(uint64_t master, std::string_view tag,
                            std::initializer_list<uint64_t> indices = {}) {
  uint64_t s = seed_combine(master, tag_hash(tag));
  for (uint64_t i : indices) s = seed_combine(s, i);
  return s;
}

// A seeded random stream. One instance per sample path / particle / trial;
// never shared across threads.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  uint64_t integer() { return engine_(); }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal_(engine_);
    return v;
  }

  // Index draw from a probability vector (assumed normalized).
  int categorical(const Eigen::VectorXd& probs) {
    double u = uniform();
    double acc = 0.0;
    for (int k = 0; k < probs.size(); ++k) {
      acc += probs[k];
      if (u <= acc) return k;
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace dime
