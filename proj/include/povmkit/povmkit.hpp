// Copyright 2026 The povmkit Authors
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

#ifndef POVMKIT_POVMKIT_HPP
#define POVMKIT_POVMKIT_HPP

// Everything at once.

#include "povmkit/error.hpp"
#include "povmkit/numkit.hpp"
#include "povmkit/povm.hpp"
#include "povmkit/sic.hpp"
#include "povmkit/circuit.hpp"
#include "povmkit/schemes.hpp"
#include "povmkit/simulator.hpp"
#include "povmkit/compiler.hpp"
#include "povmkit/tomography.hpp"
#include "povmkit/mitigation.hpp"
#include "povmkit/experiments.hpp"
#include "povmkit/io.hpp"

#endif  // POVMKIT_POVMKIT_HPP
