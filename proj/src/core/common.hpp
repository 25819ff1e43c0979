/*=========================================================================
*
*  Copyright The bmreg Authors
*
*  Licensed under the Apache License, Version 2.0 (the "License");
*  you may not use this file except in compliance with the License.
*  You may obtain a copy of the License at
*
*         http://www.apache.org/licenses/LICENSE-2.0.txt
*
*  Unless required by applicable law or agreed to in writing, software
*  distributed under the License is distributed on an "AS IS" BASIS,
*  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
*  See the License for the specific language governing permissions and
*  limitations under the License.
*
*=========================================================================*/
#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace bmreg {

enum class ErrorKind {
  Validation,  // bad arguments or violated preconditions
  Geometry,    // invalid grid or transform
  Parse,       // malformed file contents
  Io,          // open/read/write failures
  Rank,        // degenerate point geometry in a fit
  Size,        // image too small for the requested operation
  Stage,       // a registration stage could not proceed
  Numerical,   // non-finite values or failed numerical step
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

const char* error_kind_name(ErrorKind kind) noexcept;

// Worker count used by the data-parallel kernels. Values <= 0 restore the
// default, which is read from BMREG_THREADS or the hardware concurrency.
void set_thread_count(int count);
int thread_count();

// Runs body over contiguous sub-ranges of [0, count). Every kernel writes
// disjoint outputs, so results never depend on the worker count.
void parallel_for(std::int64_t count,
                  const std::function<void(std::int64_t, std::int64_t)>& body);

// Sum of partial(begin, end) over fixed-size chunks of [0, count), added in
// chunk order. Chunking does not depend on the worker count.
double ordered_sum(std::int64_t count,
                   const std::function<double(std::int64_t, std::int64_t)>& partial);

// ceil(fraction * n) with a small guard against products such as 0.7 * 10
// rounding up past an integer.
std::size_t ceil_fraction(double fraction, std::size_t n);

using LogSink = std::function<void(const std::string&)>;
void set_log_sink(LogSink sink);
void log_warning(const std::string& message);

// Shortest decimal form that reads back to the same double.
std::string format_number(double value);

}  // namespace bmreg
