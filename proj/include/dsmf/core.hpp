#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dsmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Failure categories. The CLI maps these onto exit codes.
enum class ErrorCode {
    invalid_argument,
    dim_mismatch,
    parse_error,
    unknown_key,
    unbounded_box,
    singular_a,
    empty_set,
    ill_conditioned,
    no_convergence,
    growth_cap,
    empty_belief,
    precondition,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_argument: return "INVALID_ARGUMENT";
    case ErrorCode::dim_mismatch: return "DIM_MISMATCH";
    case ErrorCode::parse_error: return "PARSE_ERROR";
    case ErrorCode::unknown_key: return "UNKNOWN_KEY";
    case ErrorCode::unbounded_box: return "UNBOUNDED_BOX";
    case ErrorCode::singular_a: return "SINGULAR_A";
    case ErrorCode::empty_set: return "EMPTY_SET";
    case ErrorCode::ill_conditioned: return "ILL_CONDITIONED";
    case ErrorCode::no_convergence: return "NO_CONVERGENCE";
    case ErrorCode::growth_cap: return "GROWTH_CAP";
    case ErrorCode::empty_belief: return "EMPTY_BELIEF";
    case ErrorCode::precondition: return "PRECONDITION";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what)
    {
    }

    ErrorCode code() const noexcept { return code_; }

    /// The description without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string& what)
{
    if (!condition) {
        throw Error(code, what);
    }
}

/// Largest absolute entry; 0 for an empty expression.
template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline void require_dims(Index got, Index expected, std::string_view context)
{
    if (got != expected) {
        throw Error(ErrorCode::dim_mismatch, std::string(context) + ": expected dimension " +
                                                 std::to_string(expected) + ", got " + std::to_string(got));
    }
}

} // namespace detail
} // namespace dsmf
