/*
 * Copyright 2026 The DIPSGNN Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DIPSGNN_DIPSGNN_HPP_
#define DIPSGNN_DIPSGNN_HPP_

#include "dipsgnn/common.hpp"
#include "dipsgnn/config.hpp"
#include "dipsgnn/experiment.hpp"
#include "dipsgnn/feature_io.hpp"
#include "dipsgnn/gnn_model.hpp"
#include "dipsgnn/graph_pipeline.hpp"
#include "dipsgnn/ldp_feature.hpp"
#include "dipsgnn/metrics.hpp"
#include "dipsgnn/privacy_accountant.hpp"
#include "dipsgnn/trainer.hpp"

#endif  // DIPSGNN_DIPSGNN_HPP_
