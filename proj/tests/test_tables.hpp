// Shared per-process kernel tables; building the algebraic_blob table runs
// the numerical convolution once and is reused across test cases.
#pragma once

#include <map>
#include <memory>
#include <string>

#include "fel/kernel_table.hpp"

inline std::shared_ptr<const fel::KernelTable> test_table(const std::string& name) {
    static std::map<std::string, std::shared_ptr<const fel::KernelTable>> cache;
    auto it = cache.find(name);
    if (it == cache.end()) {
        auto spec = fel::builtin_filter(name);
        it = cache.emplace(name, std::make_shared<fel::KernelTable>(
                                     fel::build_kernel_table(spec))).first;
    }
    return it->second;
}
