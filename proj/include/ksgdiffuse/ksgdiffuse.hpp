#pragma once

#include "ksgdiffuse/grid.hpp"
#include "ksgdiffuse/rng.hpp"
#include "ksgdiffuse/fft.hpp"
#include "ksgdiffuse/schedule.hpp"
#include "ksgdiffuse/mask.hpp"
#include "ksgdiffuse/denoiser.hpp"
#include "ksgdiffuse/sampler.hpp"
#include "ksgdiffuse/oracle.hpp"
#include "ksgdiffuse/metrics.hpp"
#include "ksgdiffuse/phantom.hpp"
#include "ksgdiffuse/io.hpp"
#include "ksgdiffuse/plugin.hpp"
