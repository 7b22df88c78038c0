#pragma once

#include "atomreg/config.hpp"
#include "atomreg/csv.hpp"
#include "atomreg/error.hpp"
#include "atomreg/experiment.hpp"
#include "atomreg/parallel.hpp"
#include "atomreg/photon.hpp"
#include "atomreg/random.hpp"
#include "atomreg/readout.hpp"
#include "atomreg/register.hpp"
#include "atomreg/repetition_code.hpp"
#include "atomreg/search.hpp"
#include "atomreg/stats.hpp"
