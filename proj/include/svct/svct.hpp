#pragma once

#include "svct/common.hpp"
#include "svct/degrade.hpp"
#include "svct/fbp.hpp"
#include "svct/geometry.hpp"
#include "svct/image.hpp"
#include "svct/io.hpp"
#include "svct/metrics.hpp"
#include "svct/phantoms.hpp"
#include "svct/projector.hpp"
#include "svct/restorer.hpp"
#include "svct/sampler.hpp"
#include "svct/severity.hpp"
#include "svct/sinogram.hpp"
#include "svct/training.hpp"
