#pragma once

#include "bands.hpp"
#include "cascade.hpp"
#include "constants.hpp"
#include "designopt.hpp"
#include "dynamics.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "scattering.hpp"
#include "two_port.hpp"
#include "io/config.hpp"
#include "io/csv.hpp"
#include "io/svg.hpp"
