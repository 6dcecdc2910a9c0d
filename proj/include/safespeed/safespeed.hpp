#pragma once

#include "safespeed/errors.hpp"
#include "safespeed/flight_params.hpp"
#include "safespeed/envelope_model.hpp"
#include "safespeed/envelope_solver.hpp"
#include "safespeed/kinematic_sim.hpp"
#include "safespeed/validation.hpp"
