// Copyright (c) 2026 The compactnn Authors. All Rights Reserved.
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

#ifndef COMPACTNN_COMMON_ERROR_H_
#define COMPACTNN_COMMON_ERROR_H_

#include <stdexcept>
#include <string>

namespace compactnn {

// Base of every error thrown by the library. Callers that only need to
// report a failure can catch this; the subclasses carry the category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define COMPACTNN_DEFINE_ERROR(Name)        \
  class Name : public Error {               \
   public:                                  \
    using Error::Error;                     \
  }

COMPACTNN_DEFINE_ERROR(ShapeError);
COMPACTNN_DEFINE_ERROR(FormatError);
COMPACTNN_DEFINE_ERROR(CorruptionError);
COMPACTNN_DEFINE_ERROR(UnsupportedError);
COMPACTNN_DEFINE_ERROR(ParameterError);
COMPACTNN_DEFINE_ERROR(CycleError);
COMPACTNN_DEFINE_ERROR(ExecutionError);
COMPACTNN_DEFINE_ERROR(FeasibilityError);
COMPACTNN_DEFINE_ERROR(ConsistencyError);
COMPACTNN_DEFINE_ERROR(UsageError);

#undef COMPACTNN_DEFINE_ERROR

// Thrown when the training loss stops being finite.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(int iteration, const std::string& what)
      : Error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

}  // namespace compactnn

#endif  // COMPACTNN_COMMON_ERROR_H_
