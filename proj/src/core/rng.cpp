#include "core/rng.hpp"
