#ifndef WTP_RANDOM_HPP_
#define WTP_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace wtp {

using Engine = std::mt19937_64;

/// Stream tags keep the generators of different logical tasks disjoint even
/// when they share a user seed.
enum class Stream : std::uint64_t {
  kTrueWtp = 1,
  kOeNoise = 2,
  kTheta = 3,
  kCue = 4,
  kDebiasEpsilon = 5,
  kBootstrap = 6,
  kKrinskyRobb = 7,
  kStudy = 8,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the substream (seed, stream, index). Each work unit (respondent
/// block, bootstrap replicate, study replicate) owns one index, so results do
/// not depend on the order in which units are evaluated.
inline std::uint64_t substream_seed(std::uint64_t seed, Stream stream,
                                    std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ (index * 0xd1b54a32d192ed03ULL));
}

inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return Engine(substream_seed(seed, stream, index));
}

}  // namespace wtp

#endif  // WTP_RANDOM_HPP_
