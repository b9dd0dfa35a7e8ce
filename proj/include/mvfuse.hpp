// Copyright 2026 The mvfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef MVFUSE_MVFUSE_HPP_
#define MVFUSE_MVFUSE_HPP_

#include "mvfuse/camera.hpp"
#include "mvfuse/cell_outputs.hpp"
#include "mvfuse/conv.hpp"
#include "mvfuse/eval.hpp"
#include "mvfuse/feature_map.hpp"
#include "mvfuse/geometry.hpp"
#include "mvfuse/io/binary.hpp"
#include "mvfuse/io/bundle.hpp"
#include "mvfuse/io/fmap.hpp"
#include "mvfuse/io/netpbm.hpp"
#include "mvfuse/kv.hpp"
#include "mvfuse/network.hpp"
#include "mvfuse/objectives.hpp"
#include "mvfuse/pipeline.hpp"
#include "mvfuse/presets.hpp"
#include "mvfuse/projection.hpp"
#include "mvfuse/raster.hpp"
#include "mvfuse/reference.hpp"
#include "mvfuse/rng.hpp"
#include "mvfuse/scene.hpp"
#include "mvfuse/selfcheck.hpp"
#include "mvfuse/sensor.hpp"
#include "mvfuse/timing.hpp"
#include "mvfuse/view_specs.hpp"
#include "mvfuse/weights.hpp"

#endif  // MVFUSE_MVFUSE_HPP_
