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
#include "common.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace bmreg {

namespace {

std::atomic<int> g_threads{0};

int default_thread_count() {
  if (const char* env = std::getenv("BMREG_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && value > 0) return static_cast<int>(std::min<long>(value, 256));
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::mutex g_log_mutex;
LogSink g_log_sink;

constexpr std::int64_t kSumChunk = 1 << 14;

}  // namespace

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Geometry: return "geometry error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Rank: return "rank error";
    case ErrorKind::Size: return "size error";
    case ErrorKind::Stage: return "stage error";
    case ErrorKind::Numerical: return "numerical error";
  }
  return "error";
}

void set_thread_count(int count) { g_threads.store(count > 0 ? count : 0); }

int thread_count() {
  const int n = g_threads.load();
  return n > 0 ? n : default_thread_count();
}

void parallel_for(std::int64_t count,
                  const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (count <= 0) return;
  const std::int64_t workers = std::min<std::int64_t>(thread_count(), count);
  if (workers <= 1) {
    body(0, count);
    return;
  }
  const std::int64_t per = (count + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::int64_t w = 0; w < workers; ++w) {
    const std::int64_t begin = w * per;
    const std::int64_t end = std::min(count, begin + per);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double ordered_sum(std::int64_t count,
                   const std::function<double(std::int64_t, std::int64_t)>& partial) {
  if (count <= 0) return 0.0;
  const std::int64_t chunks = (count + kSumChunk - 1) / kSumChunk;
  std::vector<double> sums(static_cast<std::size_t>(chunks), 0.0);
  parallel_for(chunks, [&](std::int64_t c0, std::int64_t c1) {
    for (std::int64_t c = c0; c < c1; ++c) {
      const std::int64_t b = c * kSumChunk;
      sums[static_cast<std::size_t>(c)] = partial(b, std::min(count, b + kSumChunk));
    }
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total;
}

std::size_t ceil_fraction(double fraction, std::size_t n) {
  const double product = fraction * static_cast<double>(n);
  const double rounded = std::ceil(product - 1e-9);
  if (rounded <= 0.0) return 0;
  return std::min(n, static_cast<std::size_t>(rounded));
}

void set_log_sink(LogSink sink) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_sink = std::move(sink);
}

void log_warning(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  if (g_log_sink) {
    g_log_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace bmreg
