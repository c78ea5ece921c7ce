#pragma once

// Core library. The network service lives in dtmfsim/service.hpp because it
// pulls in Boost.Beast.

#include "dtmfsim/channel.hpp"
#include "dtmfsim/driver_model.hpp"
#include "dtmfsim/live_session.hpp"
#include "dtmfsim/offline.hpp"
#include "dtmfsim/receiver.hpp"
#include "dtmfsim/sim_engine.hpp"
#include "dtmfsim/steering.hpp"
#include "dtmfsim/tables.hpp"
#include "dtmfsim/telemetry_io.hpp"
#include "dtmfsim/tone_codec.hpp"
#include "dtmfsim/tone_detector.hpp"
#include "dtmfsim/vehicle.hpp"
#include "dtmfsim/version.hpp"
#include "dtmfsim/wav.hpp"
#include "dtmfsim/wire.hpp"
