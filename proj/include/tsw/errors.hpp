// Copyright 2026 The tsw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace tsw {

enum class Errc {
  malformed_xml,
  empty_extract,
  no_snap,
  unreachable,
  out_of_range,
  degenerate_geometry,
  domain_error,
  unknown_edge,
  incompatible_class,
  no_ego_candidate,
  out_of_window,
  window_too_long,
  client_error,
  empty_description,
  config_error,
  stage_failure,
  io_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::malformed_xml: return "MalformedXml";
    case Errc::empty_extract: return "EmptyExtract";
    case Errc::no_snap: return "NoSnap";
    case Errc::unreachable: return "Unreachable";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::degenerate_geometry: return "DegenerateGeometry";
    case Errc::domain_error: return "DomainError";
    case Errc::unknown_edge: return "UnknownEdge";
    case Errc::incompatible_class: return "IncompatibleClass";
    case Errc::no_ego_candidate: return "NoEgoCandidate";
    case Errc::out_of_window: return "OutOfWindow";
    case Errc::window_too_long: return "WindowTooLong";
    case Errc::client_error: return "ClientError";
    case Errc::empty_description: return "EmptyDescription";
    case Errc::config_error: return "ConfigError";
    case Errc::stage_failure: return "StageFailure";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace tsw
