#pragma once

#include "translab/geometry/lattice.hpp"
#include "translab/geometry/patch.hpp"
#include "translab/geometry/regraph.hpp"
#include "translab/geometry/transversality.hpp"
#include "translab/geometry/checks.hpp"
