// Copyright 2026 The qncf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#pragma once

#include "qncf/error.hpp"
#include "qncf/linalg.hpp"
#include "qncf/random.hpp"
#include "qncf/hessian.hpp"
#include "qncf/hessian_io.hpp"
#include "qncf/statevector.hpp"
#include "qncf/oracle.hpp"
#include "qncf/sve.hpp"
#include "qncf/ncf.hpp"
#include "qncf/estimation.hpp"
#include "qncf/basis.hpp"
#include "qncf/readout.hpp"
#include "qncf/pipeline.hpp"
