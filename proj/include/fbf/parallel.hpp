#pragma once

#include <cstddef>
#include <functional>

namespace fbf {

// Worker count used by parallel_for; 0 restores the machine default.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(i) for i in [begin, end). Each index is visited exactly once;
// callers write to disjoint outputs so results do not depend on scheduling.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace fbf
