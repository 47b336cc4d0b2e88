#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ada {

/// Base of every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a documented precondition (bad shapes, degenerate rows, ...).
class data_error : public error {
public:
    using error::error;
};

/// A row whose Euclidean norm is below the normalization floor.
class zero_norm_row : public data_error {
public:
    zero_norm_row(std::size_t row, double norm)
        : data_error("row " + std::to_string(row) + " has norm " + std::to_string(norm) +
                     " (below 1e-12); mask or drop degenerate tokens before selection"),
          row_(row) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class format_error : public data_error {
public:
    using data_error::data_error;
};

class io_error : public error {
public:
    using error::error;
};

class dimension_mismatch : public data_error {
public:
    using data_error::data_error;
};

class empty_rep_set : public data_error {
public:
    empty_rep_set() : data_error("representative set is empty") {}
};

class config_error : public data_error {
public:
    using data_error::data_error;
};

class power_iteration_divergence : public data_error {
public:
    using data_error::data_error;
};

class all_pairs_degenerate : public data_error {
public:
    all_pairs_degenerate()
        : data_error("every token pair has a layer-l distance below 1e-9; Lipschitz ratio undefined") {}
};

/// An internal consistency check failed. Indicates a bug, not bad input.
class invariant_violation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace ada
