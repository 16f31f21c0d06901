#pragma once

#include "syncregion/freqdom.hpp"
#include "syncregion/graphnet.hpp"
#include "syncregion/io.hpp"
#include "syncregion/netsim.hpp"
#include "syncregion/numkernel.hpp"
#include "syncregion/syncore.hpp"
#include "syncregion/system.hpp"
