#pragma once

#include "cvqkd/errors.hpp"
#include "cvqkd/fock.hpp"
#include "cvqkd/fourstate.hpp"
#include "cvqkd/gaussian.hpp"
#include "cvqkd/nla.hpp"
#include "cvqkd/solvers.hpp"
