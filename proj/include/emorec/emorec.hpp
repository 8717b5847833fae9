// Copyright (c) 2026 The emorec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "emorec/data/folds.hpp"
#include "emorec/data/iemocap.hpp"
#include "emorec/data/manifest.hpp"
#include "emorec/data/synthetic.hpp"
#include "emorec/eval/cv.hpp"
#include "emorec/eval/metrics.hpp"
#include "emorec/eval/report.hpp"
#include "emorec/features/cache.hpp"
#include "emorec/features/extract.hpp"
#include "emorec/features/http_clients.hpp"
#include "emorec/features/mel.hpp"
#include "emorec/fusion/fusion.hpp"
#include "emorec/fusion/prob_file.hpp"
#include "emorec/pipeline/commands.hpp"
#include "emorec/pipeline/config.hpp"
#include "emorec/pipeline/disentangle.hpp"
#include "emorec/pipeline/evaluate.hpp"
#include "emorec/pipeline/extract.hpp"
#include "emorec/pipeline/train.hpp"
#include "emorec/probe/probe.hpp"
#include "emorec/ser/inference.hpp"
#include "emorec/ser/trainer.hpp"
#include "emorec/ter/trainer.hpp"
