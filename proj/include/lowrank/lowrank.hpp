#pragma once

#include "lowrank/binary_l0.hpp"
#include "lowrank/cost.hpp"
#include "lowrank/error.hpp"
#include "lowrank/finite_field.hpp"
#include "lowrank/fq_solver.hpp"
#include "lowrank/harness.hpp"
#include "lowrank/inner_product.hpp"
#include "lowrank/io.hpp"
#include "lowrank/l0_sketch.hpp"
#include "lowrank/linalg.hpp"
#include "lowrank/lp_solver.hpp"
#include "lowrank/matrix.hpp"
#include "lowrank/oracle.hpp"
#include "lowrank/parallel.hpp"
#include "lowrank/random.hpp"
#include "lowrank/sketch.hpp"
