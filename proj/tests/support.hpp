#pragma once

#include <string>

#include "swipde/problem_io.hpp"

namespace swipde::testing {

/// Builds a problem from file-format text.
inline SwitchingProblem problem(const std::string& text) { return problem_from_text(text); }

/// Two-mode, one-dimensional skeleton with [dims]/[box] filled in.
inline std::string one_dim(const std::string& body, std::size_t m = 2, double T = 1.0,
                           const std::string& box = "lower = -1\nupper = 1\n") {
    return "[dims]\nm = " + std::to_string(m) + "\nk = 1\nd = 1\nl = 1\nT = " + std::to_string(T) + "\np = 1\n" + body +
           "[box]\n" + box;
}

}  // namespace swipde::testing
