#pragma once

#include "psocsim/bench.hpp"
#include "psocsim/calibrate.hpp"
#include "psocsim/config.hpp"
#include "psocsim/devices.hpp"
#include "psocsim/dma.hpp"
#include "psocsim/drivers.hpp"
#include "psocsim/errors.hpp"
#include "psocsim/memory.hpp"
#include "psocsim/oracle.hpp"
#include "psocsim/platform.hpp"
#include "psocsim/ratio.hpp"
#include "psocsim/runner.hpp"
#include "psocsim/sim.hpp"
