#pragma once

#include "adscreen/errors.hpp"
#include "adscreen/parallel.hpp"
#include "adscreen/quadrature.hpp"
#include "adscreen/domain.hpp"
#include "adscreen/measure.hpp"
#include "adscreen/mechanisms.hpp"
#include "adscreen/conditions.hpp"
#include "adscreen/calibrate.hpp"
#include "adscreen/simplex.hpp"
#include "adscreen/oracle.hpp"
