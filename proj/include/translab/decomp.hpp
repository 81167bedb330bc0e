#pragma once

#include "translab/decomp/caps.hpp"
#include "translab/decomp/field_io.hpp"
#include "translab/decomp/grid.hpp"
#include "translab/decomp/localize.hpp"
#include "translab/decomp/norms.hpp"
#include "translab/decomp/verify.hpp"
