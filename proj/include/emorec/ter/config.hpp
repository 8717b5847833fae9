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

#include <cstdint>
#include <string>

#include "emorec/common/error.hpp"
#include "emorec/features/feature_types.hpp"
#include "json.hpp"

namespace emorec::ter {

struct TerArchitecture {
  int n_conv_blocks = 3;
  int filters = 512;
  int kernel = 5;
  int hidden = 512;
  int n_classes = 4;
  int token_dim = kTextDim;

  void validate() const {
    if (kernel < 1 || kernel % 2 != 1) throw UsageError("TER kernel must be odd");
    if (n_conv_blocks < 1 || filters < 1 || hidden < 1 || token_dim < 1 || n_classes < 2)
      throw UsageError("invalid TER architecture");
  }
};

struct TerTrainConfig {
  double lr = 1e-4;
  int batch = 4;
  std::int64_t iterations = 412800;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 10000;
  std::int64_t log_every = 1;
};

struct TerConfig {
  TerArchitecture arch;
  TerTrainConfig train;
  std::int64_t max_tokens = 0;  // N'; 0 until fitted on the training ids
  std::string extractor = "bert-large-uncased";
};

inline nlohmann::json to_json(const TerConfig& c) {
  const auto& a = c.arch;
  return {{"arch",
           {{"n_conv_blocks", a.n_conv_blocks}, {"filters", a.filters}, {"kernel", a.kernel},
            {"hidden", a.hidden}, {"n_classes", a.n_classes}, {"token_dim", a.token_dim}}},
          {"train",
           {{"lr", c.train.lr}, {"batch", c.train.batch}, {"iterations", c.train.iterations},
            {"seed", c.train.seed}, {"checkpoint_every", c.train.checkpoint_every},
            {"log_every", c.train.log_every}}},
          {"max_tokens", c.max_tokens},
          {"extractor", c.extractor}};
}

inline TerConfig ter_config_from_json(const nlohmann::json& j) {
  TerConfig c;
  try {
    if (j.contains("arch")) {
      const auto& a = j.at("arch");
      auto& o = c.arch;
      o.n_conv_blocks = a.value("n_conv_blocks", o.n_conv_blocks);
      o.filters = a.value("filters", o.filters);
      o.kernel = a.value("kernel", o.kernel);
      o.hidden = a.value("hidden", o.hidden);
      o.n_classes = a.value("n_classes", o.n_classes);
      o.token_dim = a.value("token_dim", o.token_dim);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.lr = t.value("lr", c.train.lr);
      c.train.batch = t.value("batch", c.train.batch);
      c.train.iterations = t.value("iterations", c.train.iterations);
      c.train.seed = t.value("seed", c.train.seed);
      c.train.checkpoint_every = t.value("checkpoint_every", c.train.checkpoint_every);
      c.train.log_every = t.value("log_every", c.train.log_every);
    }
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.extractor = j.value("extractor", c.extractor);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad TER config: ") + e.what());
  }
  c.arch.validate();
  if (c.train.batch < 1 || c.train.iterations < 0) throw UsageError("bad TER training schedule");
  if (c.max_tokens < 0) throw UsageError("max_tokens must be >= 0");
  return c;
}

}  // namespace emorec::ter
