#pragma once

#include "swipde/expr.hpp"
#include "swipde/frozen_solver.hpp"
#include "swipde/grid.hpp"
#include "swipde/mc_oracle.hpp"
#include "swipde/measure.hpp"
#include "swipde/obstacle.hpp"
#include "swipde/operators.hpp"
#include "swipde/picard.hpp"
#include "swipde/problem.hpp"
#include "swipde/problem_io.hpp"
#include "swipde/random.hpp"
#include "swipde/run.hpp"
#include "swipde/validate.hpp"
