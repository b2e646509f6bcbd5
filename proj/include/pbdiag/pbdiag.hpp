#pragma once

#include "pbdiag/model.hpp"
#include "pbdiag/io.hpp"
#include "pbdiag/propagation.hpp"
#include "pbdiag/csea.hpp"
#include "pbdiag/minimize.hpp"
#include "pbdiag/schedule.hpp"
#include "pbdiag/bench.hpp"
