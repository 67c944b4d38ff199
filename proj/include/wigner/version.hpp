#pragma once

#define WIGNER_VERSION_MAJOR 0
#define WIGNER_VERSION_MINOR 1
#define WIGNER_VERSION_PATCH 0
#define WIGNER_VERSION "0.1.0"
