#pragma once

#include "roughvar/diagnostics.hpp"
#include "roughvar/error.hpp"
#include "roughvar/grid.hpp"
#include "roughvar/isometry.hpp"
#include "roughvar/io.hpp"
#include "roughvar/parallel.hpp"
#include "roughvar/pathgen.hpp"
#include "roughvar/roughness.hpp"
#include "roughvar/schauder.hpp"
#include "roughvar/smooth_map.hpp"
#include "roughvar/summation.hpp"
#include "roughvar/variation.hpp"
#include "roughvar/version.hpp"
