#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hypmass {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct RegularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Regularity { C0 = 0, C1 = 1, C2 = 2, Analytic = 3 };

inline const char* to_string(Regularity r) {
    switch (r) {
        case Regularity::C0: return "C0";
        case Regularity::C1: return "C1";
        case Regularity::C2: return "C2";
        case Regularity::Analytic: return "analytic";
    }
    return "?";
}

inline bool at_least(Regularity have, Regularity need) {
    return static_cast<int>(have) >= static_cast<int>(need);
}

// value with first and second derivative in s
struct Jet {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

inline constexpr double pi = std::numbers::pi;

}  // namespace hypmass
