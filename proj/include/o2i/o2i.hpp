#pragma once

#include "errors.hpp"
#include "geometry.hpp"
#include "kdtree.hpp"
#include "parallel.hpp"
#include "scene.hpp"
#include "slab.hpp"
#include "synthetic.hpp"
#include "tracer.hpp"
#include "channel.hpp"
#include "calibration.hpp"
#include "config.hpp"
#include "io.hpp"
