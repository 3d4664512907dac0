#pragma once

#define BIVEX_VERSION_MAJOR 0
#define BIVEX_VERSION_MINOR 1
#define BIVEX_VERSION_PATCH 0
#define BIVEX_VERSION "0.1.0"

namespace bivex {
inline const char* version() { return BIVEX_VERSION; }
}
