// uscf/parallel.h

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

#ifndef USCF_PARALLEL_H_
#define USCF_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace uscf {

/// Caps the number of worker threads used by internal loops. 0 selects the
/// hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on each,
/// one chunk per worker. Chunks never overlap, so bodies that write only
/// their own indices produce results independent of the thread count.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace uscf

#endif  // USCF_PARALLEL_H_
