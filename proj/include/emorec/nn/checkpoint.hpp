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

// Parameter and optimizer state <-> ArrayRecord arrays. Arrays are named
// "param/<name>", "adam.m/<name>" and "adam.v/<name>" with shape [rows, cols].

#pragma once

#include <set>
#include <string>
#include <vector>

#include "emorec/features/array_record.hpp"
#include "emorec/nn/adam.hpp"

namespace emorec::nn {

template <class T>
NamedArray matrix_array(const std::string& name, const Mat<T>& m) {
  std::vector<float> v(static_cast<std::size_t>(m.size()));
  Eigen::Map<Eigen::MatrixXf>(v.data(), m.rows(), m.cols()) = m.template cast<float>();
  return NamedArray::floats(name, {m.rows(), m.cols()}, std::move(v));
}

template <class T>
void load_matrix(const ArrayRecord& rec, const std::string& name, Mat<T>& m) {
  const NamedArray& a = rec.at(name);
  if (a.dtype != DType::kFloat32 || a.shape.size() != 2 || a.shape[0] != m.rows() || a.shape[1] != m.cols())
    throw CacheError(CacheError::Kind::kCorrupt,
                     "checkpoint array '" + name + "' does not match the model shape");
  m = Eigen::Map<const Eigen::MatrixXf>(a.f32.data(), m.rows(), m.cols()).template cast<T>();
}

template <class T>
void save_params(const ParamList<T>& params, ArrayRecord& rec) {
  std::set<std::string> seen;
  for (const Param<T>* p : params) {
    if (!seen.insert(p->name).second) throw UsageError("duplicate parameter name " + p->name);
    rec.arrays.push_back(matrix_array("param/" + p->name, p->value));
  }
}

template <class T>
void load_params(const ArrayRecord& rec, const ParamList<T>& params) {
  for (Param<T>* p : params) load_matrix(rec, "param/" + p->name, p->value);
}

template <class T>
void save_adam(Adam<T>& opt, ArrayRecord& rec) {
  for (const auto& [name, m] : opt.first_moments()) rec.arrays.push_back(matrix_array("adam.m/" + name, m));
  for (const auto& [name, v] : opt.second_moments()) rec.arrays.push_back(matrix_array("adam.v/" + name, v));
  rec.metadata["adam_steps"] = opt.steps();
}

template <class T>
void load_adam(const ArrayRecord& rec, Adam<T>& opt) {
  for (auto& [name, m] : opt.first_moments()) load_matrix(rec, "adam.m/" + name, m);
  for (auto& [name, v] : opt.second_moments()) load_matrix(rec, "adam.v/" + name, v);
  opt.set_steps(rec.metadata.value("adam_steps", std::int64_t{0}));
}

// Checksum of every parameter name and value, in list order.
template <class T>
std::uint64_t params_checksum(const ParamList<T>& params) {
  std::uint64_t h = fnv1a64("");
  for (const Param<T>* p : params) {
    h = fnv1a64(p->name, h);
    const auto* bytes = reinterpret_cast<const std::byte*>(p->value.data());
    h = fnv1a64(std::span<const std::byte>(bytes, sizeof(T) * static_cast<std::size_t>(p->value.size())), h);
  }
  return h;
}

}  // namespace emorec::nn
