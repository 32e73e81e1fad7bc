#pragma once

#include "capwater/core.hpp"
#include "capwater/one_mode.hpp"
#include "capwater/multi_mode.hpp"
#include "capwater/spectral.hpp"
#include "capwater/coherent.hpp"
#include "capwater/input_state.hpp"
#include "capwater/oracle.hpp"
