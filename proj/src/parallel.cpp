#include "mixgp/parallel.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mixgp {

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
  const int nw = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (nw == 1) {
    for (std::size_t k = 0; k < n; ++k) job(k);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (int w = 0; w < nw; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t k;
        {
          std::lock_guard lock(mu);
          if (next >= n || error) return;
          k = next++;
        }
        try {
          job(k);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace mixgp
