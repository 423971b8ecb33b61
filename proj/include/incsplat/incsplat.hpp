// Copyright Contributors to the incsplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Engine umbrella header. The HTTP layer lives in incsplat/service.hpp and is not included here.

#include "incsplat/codecs.hpp"
#include "incsplat/completion.hpp"
#include "incsplat/config.hpp"
#include "incsplat/costvolume.hpp"
#include "incsplat/errors.hpp"
#include "incsplat/features.hpp"
#include "incsplat/gaussians.hpp"
#include "incsplat/geometry.hpp"
#include "incsplat/imaging.hpp"
#include "incsplat/memory.hpp"
#include "incsplat/parallel.hpp"
#include "incsplat/pipeline.hpp"
#include "incsplat/ply.hpp"
#include "incsplat/renderer.hpp"
#include "incsplat/session_io.hpp"
#include "incsplat/testkit.hpp"
