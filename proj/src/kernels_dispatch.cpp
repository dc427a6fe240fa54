#include "mashvco/kernels.hpp"

namespace mashvco::kern {

#if defined(MASHVCO_HAVE_AVX2_TU)
const Ops& avx2_ops();
#endif

namespace {

const Ops* select() {
#if defined(MASHVCO_HAVE_AVX2_TU)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return &avx2_ops();
#endif
    return &scalar();
}

const char* select_name() {
#if defined(MASHVCO_HAVE_AVX2_TU)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return "avx2";
#endif
    return "scalar";
}

} // namespace

const Ops& active() {
    static const Ops* ops = select();
    return *ops;
}

std::string_view active_name() {
    static const char* name = select_name();
    return name;
}

} // namespace mashvco::kern
