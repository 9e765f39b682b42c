#pragma once

// Everything except the JSON-backed wire formats (dds/io.hpp).

#include "dds/codec.hpp"
#include "dds/errors.hpp"
#include "dds/linear.hpp"
#include "dds/numeric.hpp"
#include "dds/occupancy.hpp"
#include "dds/rng.hpp"
#include "dds/sublinear.hpp"
#include "dds/tilt.hpp"
#include "dds/verify.hpp"
#include "dds/weights.hpp"
