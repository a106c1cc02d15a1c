// Copyright 2026 The EAGR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "eagr/bench.hpp"
#include "eagr/config.hpp"
#include "eagr/data.hpp"
#include "eagr/eagr_module.hpp"
#include "eagr/gradcheck.hpp"
#include "eagr/error.hpp"
#include "eagr/losses.hpp"
#include "eagr/metrics.hpp"
#include "eagr/net.hpp"
#include "eagr/netpbm.hpp"
#include "eagr/nonlocal.hpp"
#include "eagr/ops.hpp"
#include "eagr/optim.hpp"
#include "eagr/random.hpp"
#include "eagr/serialize.hpp"
#include "eagr/tensor.hpp"
#include "eagr/train.hpp"
