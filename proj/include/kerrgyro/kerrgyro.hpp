#pragma once

#include "kerrgyro/analytic_models.hpp"
#include "kerrgyro/compensated_sum.hpp"
#include "kerrgyro/error.hpp"
#include "kerrgyro/estimators.hpp"
#include "kerrgyro/fock_state.hpp"
#include "kerrgyro/gyro_channel.hpp"
#include "kerrgyro/noise_models.hpp"
#include "kerrgyro/parallel.hpp"
#include "kerrgyro/probes.hpp"
#include "kerrgyro/sweep.hpp"
#include "kerrgyro/version.hpp"
