#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace rankarb {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { config, data, degeneracy, domain };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// Malformed or inconsistent input data, including accounting gaps.
struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// A numerical procedure hit a degenerate case (singular regressors, zero norm, ...).
struct DegeneracyError : Error {
    explicit DegeneracyError(const std::string& what) : Error(ErrorKind::degeneracy, what) {}
};

/// Arguments outside an operation's domain (shape mismatch, empty input, bad tolerance).
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

int exit_code(ErrorKind kind) noexcept;

/// Calendar trading day. Ordered, printable as ISO-8601.
class Date {
public:
    constexpr Date() = default;
    constexpr Date(int y, unsigned m, unsigned d)
        : ymd_{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}} {}
    explicit constexpr Date(std::chrono::year_month_day ymd) : ymd_(ymd) {}

    static Date parse(std::string_view iso);

    int year() const { return static_cast<int>(ymd_.year()); }
    unsigned month() const { return static_cast<unsigned>(ymd_.month()); }
    unsigned day() const { return static_cast<unsigned>(ymd_.day()); }
    bool ok() const { return ymd_.ok(); }

    /// Next Monday-to-Friday date.
    Date next_weekday() const;
    std::string str() const;

    friend auto operator<=>(const Date& a, const Date& b) {
        return std::chrono::sys_days{a.ymd_} <=> std::chrono::sys_days{b.ymd_};
    }
    friend bool operator==(const Date& a, const Date& b) = default;

private:
    std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::January,
                                     std::chrono::day{1}};
};

}  // namespace rankarb
