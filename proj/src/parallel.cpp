#include "patron/parallel.hpp"

namespace patron {
namespace {
std::atomic<std::size_t> g_threads{1};
}

void set_thread_count(std::size_t threads) noexcept { g_threads.store(std::max<std::size_t>(threads, 1)); }

std::size_t thread_count() noexcept { return g_threads.load(); }

}  // namespace patron
