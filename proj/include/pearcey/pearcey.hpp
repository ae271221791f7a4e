#pragma once

#include "pearcey/error.hpp"
#include "pearcey/quadrature.hpp"
#include "pearcey/pearcey_functions.hpp"
#include "pearcey/operators.hpp"
#include "pearcey/rhp.hpp"
#include "pearcey/io.hpp"
#include "pearcey/verify.hpp"
