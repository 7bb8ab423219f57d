#pragma once

// Everything except the scenario harness, which needs nlohmann/json.

#include "fedosov/eps_series.hpp"
#include "fedosov/fedosov.hpp"
#include "fedosov/flatten.hpp"
#include "fedosov/fourier.hpp"
#include "fedosov/geometry.hpp"
#include "fedosov/gravity.hpp"
#include "fedosov/matrix.hpp"
#include "fedosov/random.hpp"
#include "fedosov/rational.hpp"
#include "fedosov/ring.hpp"
#include "fedosov/scalar.hpp"
#include "fedosov/tpoly.hpp"
#include "fedosov/weyl.hpp"
