#ifndef GOSSIPEG_GOSSIPEG_HPP_
#define GOSSIPEG_GOSSIPEG_HPP_

#include "gossipeg/config.hpp"
#include "gossipeg/csv.hpp"
#include "gossipeg/error.hpp"
#include "gossipeg/experiment.hpp"
#include "gossipeg/figures.hpp"
#include "gossipeg/metrics.hpp"
#include "gossipeg/plot.hpp"
#include "gossipeg/problem.hpp"
#include "gossipeg/regression.hpp"
#include "gossipeg/rng.hpp"
#include "gossipeg/schedule.hpp"
#include "gossipeg/solver.hpp"
#include "gossipeg/step.hpp"
#include "gossipeg/topology.hpp"

#endif  // GOSSIPEG_GOSSIPEG_HPP_
