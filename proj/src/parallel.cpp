#include "edlab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace edlab {

namespace {
std::atomic<int> g_threads{0};

int effective_threads() {
  int n = g_threads.load();
  if (n <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return n;
}
}  // namespace

void set_thread_count(int n) { g_threads.store(n < 0 ? 0 : n); }
int thread_count() { return effective_threads(); }

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = std::min<std::int64_t>(effective_threads(), n);
  if (workers <= 1 || n < 1024) {
    fn(0, n);
    return;
  }
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const std::int64_t b = w * chunk;
    const std::int64_t e = std::min<std::int64_t>(b + chunk, n);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& t : pool) t.join();
}

namespace {
constexpr std::int64_t kBlock = 4096;
}

double block_sum(std::int64_t n, const std::function<double(std::int64_t)>& f) {
  // Neumaier compensation across blocks; plain accumulation inside a block.
  double sum = 0.0, comp = 0.0;
  for (std::int64_t b = 0; b < n; b += kBlock) {
    const std::int64_t e = std::min<std::int64_t>(b + kBlock, n);
    double part = 0.0;
    for (std::int64_t i = b; i < e; ++i) part += f(i);
    const double t = sum + part;
    if (std::abs(sum) >= std::abs(part))
      comp += (sum - t) + part;
    else
      comp += (part - t) + sum;
    sum = t;
  }
  return sum + comp;
}

std::complex<double> block_sum_complex(
    std::int64_t n,
    const std::function<std::complex<double>(std::int64_t)>& f) {
  double re = 0.0, re_c = 0.0, im = 0.0, im_c = 0.0;
  for (std::int64_t b = 0; b < n; b += kBlock) {
    const std::int64_t e = std::min<std::int64_t>(b + kBlock, n);
    double pr = 0.0, pi = 0.0;
    for (std::int64_t i = b; i < e; ++i) {
      const std::complex<double> v = f(i);
      pr += v.real();
      pi += v.imag();
    }
    double t = re + pr;
    if (std::abs(re) >= std::abs(pr))
      re_c += (re - t) + pr;
    else
      re_c += (pr - t) + re;
    re = t;
    t = im + pi;
    if (std::abs(im) >= std::abs(pi))
      im_c += (im - t) + pi;
    else
      im_c += (pi - t) + im;
    im = t;
  }
  return {re + re_c, im + im_c};
}

}  // namespace edlab
