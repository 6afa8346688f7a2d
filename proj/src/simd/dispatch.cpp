#include <atomic>

#include "diqkd/errors.hpp"
#include "diqkd/simd/kernels.hpp"

namespace diqkd::simd {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(DIQKD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

std::atomic<Level>& active_slot() noexcept {
    static std::atomic<Level> slot{best_available_level()};
    return slot;
}

}  // namespace

std::string_view level_name(Level level) noexcept {
    switch (level) {
        case Level::scalar: return "scalar";
        case Level::avx2: return "avx2";
    }
    return "unknown";
}

bool level_supported(Level level) noexcept {
    switch (level) {
        case Level::scalar: return true;
        case Level::avx2: return cpu_has_avx2();
    }
    return false;
}

Level best_available_level() noexcept { return level_supported(Level::avx2) ? Level::avx2 : Level::scalar; }

const KernelTable& kernels(Level level) {
    require(level_supported(level), "SIMD level '" + std::string(level_name(level)) + "' is not available");
#if defined(DIQKD_HAVE_AVX2)
    if (level == Level::avx2) return detail::avx2_table();
#endif
    return detail::scalar_table();
}

const KernelTable& active_kernels() noexcept {
#if defined(DIQKD_HAVE_AVX2)
    if (active_slot().load(std::memory_order_relaxed) == Level::avx2) return detail::avx2_table();
#endif
    return detail::scalar_table();
}

Level active_level() noexcept { return active_slot().load(std::memory_order_relaxed); }

void set_active_level(Level level) {
    require(level_supported(level), "SIMD level '" + std::string(level_name(level)) + "' is not available");
    active_slot().store(level, std::memory_order_relaxed);
}

}  // namespace diqkd::simd
