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

// Clients for a pretrained-model server. Each request and response body is an
// encoded ArrayRecord:
//
//   POST <endpoint>/v1/wav2vec  {waveform f32[n]}       -> {stack f32[25, T, D]}
//   POST <endpoint>/v1/speaker  {waveform f32[n]}       -> {embedding f32[256]}
//   POST <endpoint>/v1/text     metadata.transcript     -> {tokens f32[N, D]}
//
// The model identifier travels as metadata.model and is part of the
// fingerprint, so swapping models invalidates cached features.

#pragma once

#include <memory>
#include <string>

#include "emorec/features/array_record.hpp"
#include "emorec/features/model_clients.hpp"
#include "httplib.h"

namespace emorec {

class HttpModelTransport {
 public:
  HttpModelTransport(std::string endpoint, int timeout_s = 120)
      : endpoint_(std::move(endpoint)), timeout_s_(timeout_s) {}

  const std::string& endpoint() const { return endpoint_; }

  ArrayRecord call(const std::string& route, const ArrayRecord& request) const {
    httplib::Client cli(endpoint_);
    cli.set_connection_timeout(timeout_s_);
    cli.set_read_timeout(timeout_s_);
    cli.set_write_timeout(timeout_s_);
    const auto body = encode_record(request);
    auto res = cli.Post(route, reinterpret_cast<const char*>(body.data()), body.size(),
                        "application/octet-stream");
    if (!res)
      throw ModelClientError("model server " + endpoint_ + route +
                             " unavailable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw ModelClientError("model server " + endpoint_ + route + " answered HTTP " +
                             std::to_string(res->status) + ": " + res->body.substr(0, 200));
    try {
      const auto* p = reinterpret_cast<const std::byte*>(res->body.data());
      return decode_record(std::span<const std::byte>(p, res->body.size()));
    } catch (const CacheError& e) {
      throw ModelClientError("model server " + endpoint_ + route + " sent a bad record: " + e.what());
    }
  }

 private:
  std::string endpoint_;
  int timeout_s_;
};

namespace detail {

inline ArrayRecord waveform_request(const std::string& model, std::span<const float> wave) {
  ArrayRecord r;
  r.fingerprint = model;
  r.metadata["model"] = model;
  r.metadata["sample_rate"] = 16000;
  r.arrays.push_back(NamedArray::floats("waveform", {static_cast<std::int64_t>(wave.size())},
                                        std::vector<float>(wave.begin(), wave.end())));
  return r;
}

}  // namespace detail

class HttpWav2vecClient final : public Wav2vecClient {
 public:
  HttpWav2vecClient(HttpModelTransport transport, std::string model)
      : transport_(std::move(transport)), model_(std::move(model)) {}

  std::string fingerprint() const override { return "http-wav2vec(" + model_ + ")"; }

  LayerStack infer(std::span<const float> wave) const override {
    const ArrayRecord res = transport_.call("/v1/wav2vec", detail::waveform_request(model_, wave));
    const NamedArray* a = res.find("stack");
    if (!a || a->dtype != DType::kFloat32 || a->shape.size() != 3)
      throw ModelClientError(fingerprint() + ": response lacks a rank-3 'stack' array");
    return LayerStack{a->shape[0], a->shape[1], a->shape[2], a->f32};
  }

 private:
  HttpModelTransport transport_;
  std::string model_;
};

class HttpSpeakerVerifierClient final : public SpeakerVerifierClient {
 public:
  HttpSpeakerVerifierClient(HttpModelTransport transport, std::string model)
      : transport_(std::move(transport)), model_(std::move(model)) {}

  std::string fingerprint() const override { return "http-speaker(" + model_ + ")"; }

  std::vector<float> embed(std::span<const float> wave) const override {
    const ArrayRecord res = transport_.call("/v1/speaker", detail::waveform_request(model_, wave));
    const NamedArray* a = res.find("embedding");
    if (!a || a->dtype != DType::kFloat32)
      throw ModelClientError(fingerprint() + ": response lacks an 'embedding' array");
    return a->f32;
  }

 private:
  HttpModelTransport transport_;
  std::string model_;
};

class HttpTextModelClient final : public TextModelClient {
 public:
  HttpTextModelClient(HttpModelTransport transport, std::string model)
      : transport_(std::move(transport)), model_(std::move(model)) {}

  std::string fingerprint() const override { return "http-text(" + model_ + ")"; }

  TextFeatureSet embed(const std::string& transcript) const override {
    ArrayRecord req;
    req.fingerprint = model_;
    req.metadata["model"] = model_;
    req.metadata["transcript"] = transcript;
    const ArrayRecord res = transport_.call("/v1/text", req);
    const NamedArray* a = res.find("tokens");
    if (!a || a->dtype != DType::kFloat32 || a->shape.size() != 2)
      throw ModelClientError(fingerprint() + ": response lacks a rank-2 'tokens' array");
    TextFeatureSet t;
    t.n_tokens = a->shape[0];
    t.dim = a->shape[1];
    t.tokens = a->f32;
    return t;
  }

 private:
  HttpModelTransport transport_;
  std::string model_;
};

}  // namespace emorec
