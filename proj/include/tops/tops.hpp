/*
 * Copyright 2026 the tops authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TOPS_TOPS_HPP
#define TOPS_TOPS_HPP

#include "tops/bounds.hpp"
#include "tops/dataset.hpp"
#include "tops/errors.hpp"
#include "tops/harness.hpp"
#include "tops/inference.hpp"
#include "tops/learners.hpp"
#include "tops/losses.hpp"
#include "tops/path_weights.hpp"
#include "tops/random.hpp"
#include "tops/stats.hpp"
#include "tops/tree_growth.hpp"

#endif  // TOPS_TOPS_HPP
