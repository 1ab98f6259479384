#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace sprank {

// Error with a stable machine-readable category; the CLI maps categories to
// exit diagnostics and tests match on them.
class Error : public std::runtime_error {
 public:
  Error(std::string_view category, std::string_view message)
      : std::runtime_error(std::string(category) + ": " + std::string(message)),
        category_(category),
        message_(message) {}

  const std::string& category() const noexcept { return category_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string category_;
  std::string message_;
};

[[noreturn]] inline void fail(std::string_view category, std::string_view message) {
  throw Error(category, message);
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' || s[i] == '\n')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r' && s[j] != '\n') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Shortest exact decimal form; strtod of the result reproduces the bits.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Mixes a global seed with a per-item key so randomness is independent of
// processing order and worker count.
inline std::uint64_t mix_seed(std::uint64_t global_seed, std::uint64_t local_key) {
  std::uint64_t z = global_seed + 0x9e3779b97f4a7c15ULL * (local_key + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Unbiased draw in [0, n) by rejection; stable across platforms for a fixed
// generator, unlike std::uniform_int_distribution.
template <typename Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t max = ~std::uint64_t{0};
  const std::uint64_t limit = max - max % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

// Order-independent parallel map: fn(i) for i in [0, n). Results must be
// written to per-index slots by the caller; the first exception is rethrown.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> threads;
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (std::size_t t = 0; t < k; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += k) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace sprank
