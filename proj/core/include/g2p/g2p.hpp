#pragma once

#include "g2p/augment.hpp"
#include "g2p/boundary.hpp"
#include "g2p/covariance.hpp"
#include "g2p/errors.hpp"
#include "g2p/gradcheck.hpp"
#include "g2p/losses.hpp"
#include "g2p/metrics.hpp"
#include "g2p/scene_io.hpp"
#include "g2p/spatial_index.hpp"
#include "g2p/synth.hpp"
#include "g2p/types.hpp"
