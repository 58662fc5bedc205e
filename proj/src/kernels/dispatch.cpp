#include "syllab/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace syllab::kernels {

#ifndef SYLLAB_HAVE_AVX2
const KernelTable* avx2() { return nullptr; }
#endif

namespace {

const KernelTable& resolve() {
    if (const char* forced = std::getenv("SYLLAB_KERNELS"); forced != nullptr && std::string_view(forced) == "scalar") {
        return scalar();
    }
    if (const KernelTable* table = avx2()) return *table;
    return scalar();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = resolve();
    return table;
}

}  // namespace syllab::kernels
