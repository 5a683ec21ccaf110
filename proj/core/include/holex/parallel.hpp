#pragma once

#include <thread>
#include <vector>

namespace holex {

/// Map [0,n) over `workers` threads in static chunks and combine the partial
/// results in chunk order. The reduction order is fixed by the chunking, not
/// by thread timing, so results do not depend on the worker count.
template <typename Acc, typename MapFn, typename CombineFn>
Acc parallel_map_reduce(std::size_t n, int workers, Acc init, MapFn map_chunk,
                        CombineFn combine) {
  if (workers < 1) workers = 1;
  const std::size_t nw = std::min<std::size_t>(workers, n == 0 ? 1 : n);
  std::vector<Acc> partial(nw, init);
  if (nw <= 1) {
    partial[0] = map_chunk(std::size_t{0}, n, init);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + nw - 1) / nw;
    for (std::size_t w = 0; w < nw; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      pool.emplace_back([&partial, w, lo, hi, &map_chunk, init]() {
        partial[w] = map_chunk(lo, hi, init);
      });
    }
    for (auto& t : pool) t.join();
  }
  Acc out = init;
  for (const Acc& p : partial) out = combine(out, p);
  return out;
}

}  // namespace holex
