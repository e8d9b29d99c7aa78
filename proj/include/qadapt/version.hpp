#pragma once

#define QADAPT_VERSION "1.0.0"

namespace qadapt {

inline constexpr const char* version = QADAPT_VERSION;

#if defined(__clang__)
inline constexpr const char* compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
inline constexpr const char* compiler = "gcc " __VERSION__;
#else
inline constexpr const char* compiler = "unknown";
#endif

}  // namespace qadapt
