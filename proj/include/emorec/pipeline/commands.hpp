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

#include <exception>
#include <filesystem>

#include "emorec/common/error.hpp"
#include "json.hpp"

namespace emorec::pipeline {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitTraining = 3 };

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const CacheError*>(&e) ||
      dynamic_cast<const ModelClientError*>(&e) || dynamic_cast<const std::filesystem::filesystem_error*>(&e) ||
      dynamic_cast<const nlohmann::json::exception*>(&e))
    return kExitData;
  return kExitTraining;
}

}  // namespace emorec::pipeline
