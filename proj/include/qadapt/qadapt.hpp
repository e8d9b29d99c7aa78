#pragma once

#include "qadapt/analysis.hpp"
#include "qadapt/estimator.hpp"
#include "qadapt/noise.hpp"
#include "qadapt/quantizer.hpp"
#include "qadapt/random.hpp"
#include "qadapt/simulator.hpp"
#include "qadapt/special_functions.hpp"
#include "qadapt/version.hpp"
