#ifndef CROWDLAB_VERSION_HPP_
#define CROWDLAB_VERSION_HPP_

namespace crowdlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace crowdlab

#endif  // CROWDLAB_VERSION_HPP_
