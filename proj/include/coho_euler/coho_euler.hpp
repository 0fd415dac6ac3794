#pragma once

#include "errors.hpp"
#include "numerics.hpp"
#include "lie_algebra.hpp"
#include "homogeneous.hpp"
#include "spline.hpp"
#include "profile.hpp"
#include "parallel.hpp"
#include "reduced_euler.hpp"
#include "initial_data.hpp"
#include "diagnostics.hpp"
#include "integrate.hpp"
#include "config.hpp"
#include "catalog.hpp"
#include "output.hpp"
