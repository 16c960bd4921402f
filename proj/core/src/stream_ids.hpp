#ifndef CROWDLAB_SRC_STREAM_IDS_HPP_
#define CROWDLAB_SRC_STREAM_IDS_HPP_

#include <cstdint>

namespace crowdlab {
namespace streams {

// Purpose tags for RngStream addresses. Distinct per draw site so adding a
// consumer never shifts another stream's values.
inline constexpr std::uint64_t kSimPrecision = 0x11;
inline constexpr std::uint64_t kSimLabels = 0x12;
inline constexpr std::uint64_t kChainInitCluster = 0x21;
inline constexpr std::uint64_t kChainTruth = 0x22;
inline constexpr std::uint64_t kChainCluster = 0x23;
inline constexpr std::uint64_t kChainBeta = 0x24;
inline constexpr std::uint64_t kChainEta = 0x25;

}  // namespace streams
}  // namespace crowdlab

#endif  // CROWDLAB_SRC_STREAM_IDS_HPP_
