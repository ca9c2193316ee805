#pragma once

#include <stdexcept>
#include <string>

namespace multibump {

// Thrown when the shooting bisection cannot bracket the decaying solution
// between a rebounding and a sign-changing initial height.
struct NoBracket : std::runtime_error {
    explicit NoBracket(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a profile's far-field fit degrades beyond the quality threshold,
// which indicates the grid cannot resolve the tail.
struct GridTooCoarse : std::runtime_error {
    explicit GridTooCoarse(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a tridiagonal solve hits a vanishing pivot or the solution fails
// the residual check. Must not occur for the potentials used here (0, 3U^2).
struct SingularOperator : std::runtime_error {
    explicit SingularOperator(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown by the far-field fitter when the window contains sign changes or
// values below the underflow guard.
struct DegenerateWindow : std::runtime_error {
    explicit DegenerateWindow(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a fitted interaction constant has relative rms above 5%.
struct PoorFit : std::runtime_error {
    explicit PoorFit(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when the window parameter mu violates its lower bound
// (mu > m - n for the two-system window, mu > 1 for the three-system ell=2 one).
struct BadMu : std::invalid_argument {
    explicit BadMu(const std::string& msg) : std::invalid_argument(msg) {}
};

// Thrown for arguments outside an operation's stated range
// (theta outside (0,1), epsilon >= 1/e where a window needs |ln eps| > 1, ...).
struct OutOfRange : std::invalid_argument {
    explicit OutOfRange(const std::string& msg) : std::invalid_argument(msg) {}
};

// Thrown by the landscape maximizer in strict mode when the maximum sits on
// the window boundary.
struct BoundaryMaximum : std::runtime_error {
    explicit BoundaryMaximum(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when the damped Newton iteration exhausts its step ladder without
// reducing the residual.
struct DivergedNewton : std::runtime_error {
    explicit DivergedNewton(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace multibump
