#pragma once

#ifndef DREAM_VERSION
#define DREAM_VERSION "0.0.0"
#endif

namespace dream {

inline constexpr const char* kVersion = DREAM_VERSION;

}  // namespace dream
