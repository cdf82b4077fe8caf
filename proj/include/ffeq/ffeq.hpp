#pragma once

#include "ffeq/analysis.hpp"
#include "ffeq/banded.hpp"
#include "ffeq/channel.hpp"
#include "ffeq/equalizer.hpp"
#include "ffeq/error.hpp"
#include "ffeq/linalg.hpp"
#include "ffeq/modem.hpp"
#include "ffeq/profile_io.hpp"
#include "ffeq/tdl.hpp"
#include "ffeq/harness/config.hpp"
#include "ffeq/harness/simulate.hpp"
#include "ffeq/harness/sweep.hpp"
#include "ffeq/harness/validation.hpp"
