#pragma once

#define QUOTASIM_VERSION "0.1.0"
