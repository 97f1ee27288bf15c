#ifndef UVT_PARALLEL_HPP
#define UVT_PARALLEL_HPP

#include <functional>
#include <thread>
#include <vector>

namespace uvt {

// Runs fn(chunk_index, begin, end) over [0, n) split into fixed chunks.
// Chunks are distributed over `workers` threads; each chunk writes only its
// own slot, so results never depend on scheduling.
inline void parallel_chunks(long n, long chunk_size, int workers,
                            const std::function<void(long, long, long)>& fn) {
  if (n <= 0) return;
  const long n_chunks = (n + chunk_size - 1) / chunk_size;
  if (workers <= 1 || n_chunks == 1) {
    for (long c = 0; c < n_chunks; ++c)
      fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (long c = w; c < n_chunks; c += workers)
        fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace uvt

#endif
