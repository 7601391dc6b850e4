#pragma once

#define HARMAP_VERSION_MAJOR 0
#define HARMAP_VERSION_MINOR 1
#define HARMAP_VERSION_PATCH 0
#define HARMAP_VERSION_STRING "0.1.0"

namespace harmap {
inline const char* version() { return HARMAP_VERSION_STRING; }
}
