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

#include <functional>
#include <string>

namespace emorec::pipeline {

// Message sinks for pipeline commands; unset sinks drop messages.
struct Logger {
  std::function<void(const std::string&)> on_info;
  std::function<void(const std::string&)> on_warn;

  void info(const std::string& m) const {
    if (on_info) on_info(m);
  }
  void warn(const std::string& m) const {
    if (on_warn) on_warn(m);
  }
};

}  // namespace emorec::pipeline
