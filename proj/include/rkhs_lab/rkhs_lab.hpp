#pragma once

#include "rkhs_lab/core.hpp"
#include "rkhs_lab/geometry.hpp"
#include "rkhs_lab/interpolation.hpp"
#include "rkhs_lab/io.hpp"
#include "rkhs_lab/matrix_calculus.hpp"
#include "rkhs_lab/nc_space.hpp"
#include "rkhs_lab/random_sequences.hpp"
#include "rkhs_lab/rkhs_kernels.hpp"
