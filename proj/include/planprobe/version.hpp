#ifndef PLANPROBE_VERSION_HPP
#define PLANPROBE_VERSION_HPP

namespace planprobe {

inline constexpr const char* kToolkitVersion = "planprobe 0.1.0";

}  // namespace planprobe

#endif  // PLANPROBE_VERSION_HPP
