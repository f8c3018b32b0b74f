// Copyright 2026 The endopbr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "endopbr/analytic_scene.hpp"
#include "endopbr/augment.hpp"
#include "endopbr/brdf.hpp"
#include "endopbr/checkpoint.hpp"
#include "endopbr/common.hpp"
#include "endopbr/dataset.hpp"
#include "endopbr/evaluate.hpp"
#include "endopbr/frame.hpp"
#include "endopbr/geometry.hpp"
#include "endopbr/hashgrid.hpp"
#include "endopbr/image.hpp"
#include "endopbr/lighting.hpp"
#include "endopbr/loss.hpp"
#include "endopbr/metrics.hpp"
#include "endopbr/mlp.hpp"
#include "endopbr/model.hpp"
#include "endopbr/optim.hpp"
#include "endopbr/param_store.hpp"
#include "endopbr/parallel.hpp"
#include "endopbr/png_io.hpp"
#include "endopbr/renderer.hpp"
#include "endopbr/rng.hpp"
#include "endopbr/serialize.hpp"
#include "endopbr/trainer.hpp"
