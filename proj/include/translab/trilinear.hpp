#pragma once

#include "translab/region.hpp"
#include "translab/trilinear/cases.hpp"
#include "translab/trilinear/form.hpp"
#include "translab/trilinear/lattice.hpp"
#include "translab/trilinear/radial.hpp"
#include "translab/trilinear/rescaled.hpp"
#include "translab/trilinear/summation.hpp"
#include "translab/trilinear/verify.hpp"
#include "translab/trilinear/volume.hpp"
