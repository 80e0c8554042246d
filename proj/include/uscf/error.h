// uscf/error.h

// Copyright 2026  The USCF Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef USCF_ERROR_H_
#define USCF_ERROR_H_

#include <stdexcept>
#include <string>

namespace uscf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, missing or mutually inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical precondition failed: rank out of range, effective rank
/// deficiency, singular factors.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace uscf

#endif  // USCF_ERROR_H_
