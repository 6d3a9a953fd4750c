#ifndef BAYES_ERRORS_HPP
#define BAYES_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bayes {

// Invalid distribution or model parameters (nonpositive scales, bad shapes, ...).
struct parameter_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A numerical operation produced a non-finite or otherwise unusable result.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A matrix factorization failed (non-PD covariance after jitter, rank deficiency).
struct decomposition_error : numerical_error {
    using numerical_error::numerical_error;
};

// Input data violates a precondition (empty, constant, out of range).
struct data_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// CSV / config ingestion problems, carrying a location when available.
struct ingestion_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative procedure exhausted its budget without meeting its tolerance.
struct convergence_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace bayes

#endif
